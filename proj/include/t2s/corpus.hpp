#pragma once

// Tweet dumps, tweet cleaning and per-author timelines sliced by date window.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "t2s/common.hpp"
#include "t2s/text.hpp"

namespace t2s {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

enum class TweetKind { original, retweet, reply, quote };

inline std::string_view to_string(TweetKind kind) {
    switch (kind) {
        case TweetKind::original: return "original";
        case TweetKind::retweet: return "retweet";
        case TweetKind::reply: return "reply";
        case TweetKind::quote: return "quote";
    }
    return "original";
}

inline std::optional<TweetKind> parse_tweet_kind(std::string_view s) {
    if (s == "original") return TweetKind::original;
    if (s == "retweet") return TweetKind::retweet;
    if (s == "reply") return TweetKind::reply;
    if (s == "quote") return TweetKind::quote;
    return std::nullopt;
}

namespace detail {

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > s.size()) {
        return false;
    }
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + width, out);
    return ec == std::errc{};
}

}  // namespace detail

/// Parses "YYYY-MM-DD".
inline std::optional<Date> parse_date(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_fixed_int(s, 0, 4, y) ||
        !detail::parse_fixed_int(s, 5, 2, m) || !detail::parse_fixed_int(s, 8, 2, d)) {
        return std::nullopt;
    }
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) {
        return std::nullopt;
    }
    return date;
}

inline std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

/// Parses an ISO-8601 timestamp: "YYYY-MM-DDTHH:MM:SS" with optional fractional
/// seconds and an optional "Z" or "+hh:mm"/"-hh:mm" offset (absent means UTC).
/// Fractional seconds are truncated.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' || s[16] != ':') {
        return std::nullopt;
    }
    auto date = parse_date(s.substr(0, 10));
    int hh = 0, mm = 0, ss = 0;
    if (!date || !detail::parse_fixed_int(s, 11, 2, hh) || !detail::parse_fixed_int(s, 14, 2, mm) ||
        !detail::parse_fixed_int(s, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
        return std::nullopt;
    }
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t digits_start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            ++pos;
        }
        if (pos == digits_start) {
            return std::nullopt;
        }
    }
    std::chrono::seconds offset{0};
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            ++pos;
        } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
            int oh = 0, om = 0;
            if (!detail::parse_fixed_int(s, pos + 1, 2, oh) ||
                !detail::parse_fixed_int(s, pos + 4, 2, om) || oh > 23 || om > 59) {
                return std::nullopt;
            }
            offset = std::chrono::hours{oh} + std::chrono::minutes{om};
            if (s[pos] == '-') {
                offset = -offset;
            }
            pos += 6;
        } else {
            return std::nullopt;
        }
    }
    const auto local = std::chrono::sys_days{*date} + std::chrono::hours{hh} +
                       std::chrono::minutes{mm} + std::chrono::seconds{ss};
    return Timestamp{local - offset};
}

inline std::string format_timestamp(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const Date date{day};
    const std::chrono::hh_mm_ss tod{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(date).c_str(),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

struct RawTweet {
    std::string id;
    std::string author;
    Timestamp created_at{};
    std::string text;
    std::optional<std::string> text_translated;
    TweetKind kind = TweetKind::original;
};

struct CleanTweet {
    std::string id;
    std::string author;
    Timestamp created_at{};
    std::string text;
    std::size_t word_count = 0;
};

/// Tweets of one author, ascending by (created_at, id).
struct Timeline {
    std::string author;
    std::vector<CleanTweet> tweets;
};

/// Inclusive date range. The end date covers its whole UTC day.
class DatasetWindow {
public:
    DatasetWindow(std::string name, Date start, Date end)
        : name_(std::move(name)), start_(start), end_(end) {
        if (!start.ok() || !end.ok() || !(std::chrono::sys_days{start} < std::chrono::sys_days{end})) {
            throw DataError("window '" + name_ + "': start must precede end");
        }
    }

    /// One of D3, D4, D5, D7: j months of tweets ending on the 2019-05-25 election eve.
    static DatasetWindow named(std::string_view name) {
        using namespace std::chrono;
        constexpr Date kEnd{year{2019}, May, day{25}};
        if (name == "D3") return {"D3", Date{year{2019}, March, day{1}}, kEnd};
        if (name == "D4") return {"D4", Date{year{2019}, February, day{1}}, kEnd};
        if (name == "D5") return {"D5", Date{year{2019}, January, day{1}}, kEnd};
        if (name == "D7") return {"D7", Date{year{2018}, November, day{1}}, kEnd};
        throw DataError("unknown dataset window: " + std::string(name));
    }

    static std::vector<DatasetWindow> all_named() {
        return {named("D3"), named("D4"), named("D5"), named("D7")};
    }

    /// Accepts a window name ("D4"), "all", or "YYYY-MM-DD:YYYY-MM-DD".
    static DatasetWindow parse(std::string_view spec) {
        if (spec == "all") {
            return unbounded();
        }
        if (const auto colon = spec.find(':'); colon != std::string_view::npos) {
            auto start = parse_date(spec.substr(0, colon));
            auto end = parse_date(spec.substr(colon + 1));
            if (!start || !end) {
                throw DataError("bad window '" + std::string(spec) + "', expected YYYY-MM-DD:YYYY-MM-DD");
            }
            return {std::string(spec), *start, *end};
        }
        return named(spec);
    }

    static DatasetWindow unbounded() {
        using namespace std::chrono;
        return {"all", Date{year{1970}, January, day{1}}, Date{year{9999}, December, day{31}}};
    }

    const std::string& name() const { return name_; }
    Date start() const { return start_; }
    Date end() const { return end_; }

    bool contains(Timestamp t) const {
        const Timestamp lo{std::chrono::sys_days{start_}};
        const Timestamp hi{std::chrono::sys_days{end_} + std::chrono::days{1}};
        return t >= lo && t < hi;
    }

    friend bool operator==(const DatasetWindow&, const DatasetWindow&) = default;

private:
    std::string name_;
    Date start_;
    Date end_;
};

namespace detail {

inline std::string remove_urls(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const bool token_start = i == 0 || text::is_space(s[i - 1]);
        const bool url = text::starts_with_icase(s, i, "http://") ||
                         text::starts_with_icase(s, i, "https://") ||
                         (token_start && (text::starts_with_icase(s, i, "www.") ||
                                          text::starts_with_icase(s, i, "t.co/")));
        if (url) {
            while (i < s.size() && !text::is_space(s[i])) {
                ++i;
            }
        } else {
            out.push_back(s[i++]);
        }
    }
    return out;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

inline std::size_t skip_spaces(std::string_view s, std::size_t pos) {
    while (pos < s.size() && text::is_space(s[pos])) {
        ++pos;
    }
    return pos;
}

/// Length of an "@handle" token at pos, or 0.
inline std::size_t mention_length(std::string_view s, std::size_t pos) {
    if (pos >= s.size() || s[pos] != '@') {
        return 0;
    }
    std::size_t end = pos + 1;
    while (end < s.size() && text::is_ascii_word(s[end])) {
        ++end;
    }
    return end - pos > 1 ? end - pos : 0;
}

inline std::string strip_retweet_prefix(std::string_view s) {
    std::size_t pos = skip_spaces(s, 0);
    if (s.substr(pos, 3) != "RT ") {
        return std::string(s);
    }
    pos += 3;
    const std::size_t handle = mention_length(s, pos);
    if (handle == 0 || pos + handle >= s.size() || s[pos + handle] != ':') {
        return std::string(s);
    }
    return std::string(s.substr(skip_spaces(s, pos + handle + 1)));
}

inline std::string strip_reply_mentions(std::string_view s) {
    std::size_t pos = skip_spaces(s, 0);
    for (;;) {
        const std::size_t len = mention_length(s, pos);
        if (len == 0 || (pos + len < s.size() && !text::is_space(s[pos + len]))) {
            break;
        }
        pos = skip_spaces(s, pos + len);
    }
    return std::string(s.substr(pos));
}

/// Drops "#tag" tokens, emoji code points and bytes that are not valid UTF-8.
inline std::string remove_hashtags_and_emoji(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto decoded = text::decode_utf8(s, i);
        if (!decoded) {
            ++i;
            continue;
        }
        if (decoded->cp == U'#') {
            std::size_t j = i + 1;
            while (j < s.size()) {
                const auto next = text::decode_utf8(s, j);
                if (!next || !text::is_hashtag_char(next->cp)) {
                    break;
                }
                j += next->length;
            }
            if (j > i + 1) {
                i = j;
                continue;
            }
        }
        if (!text::is_emoji(decoded->cp)) {
            out.append(s.substr(i, decoded->length));
        }
        i += decoded->length;
    }
    return out;
}

inline std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (text::is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            out.push_back(c);
        }
    }
    return out;
}

inline std::string clean_pass(std::string_view raw, TweetKind kind) {
    std::string s = remove_urls(raw);
    replace_all(s, "++", "");
    replace_all(s, "&gt", "");
    replace_all(s, "&lt", "");
    replace_all(s, "\n", " ");
    s = strip_retweet_prefix(s);
    if (kind == TweetKind::reply) {
        s = strip_reply_mentions(s);
    }
    s = remove_hashtags_and_emoji(s);
    return normalize_whitespace(s);
}

}  // namespace detail

inline constexpr std::size_t kMinWordCount = 4;

/// Strips URLs, "++", "&gt", "&lt", newlines, the "RT @user:" prefix, leading
/// reply mentions (replies only), hashtags and emoji, then normalizes
/// whitespace. The rules are applied until nothing changes. Returns nullopt
/// when fewer than four words remain.
inline std::optional<std::string> clean_text(std::string_view raw, TweetKind kind = TweetKind::original) {
    std::string current = detail::clean_pass(raw, kind);
    for (;;) {
        std::string next = detail::clean_pass(current, kind);
        if (next == current) {
            break;
        }
        current = std::move(next);
    }
    if (text::count_words(current) < kMinWordCount) {
        return std::nullopt;
    }
    return current;
}

struct LoadDiagnostics {
    std::size_t lines = 0;
    std::size_t loaded = 0;
    std::size_t skipped = 0;
    std::vector<std::string> messages;
};

/// Parses one dump record. Throws DataError describing the defect.
inline RawTweet parse_raw_tweet(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw DataError("record is not a JSON object");
    }
    const auto required_string = [&](const char* key) -> std::string {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw DataError(std::string("missing or non-string key '") + key + "'");
        }
        return it->get<std::string>();
    };
    RawTweet t;
    t.id = required_string("id");
    if (t.id.empty()) {
        throw DataError("empty id");
    }
    t.author = required_string("author");
    const std::string created = required_string("created_at");
    const auto ts = parse_timestamp(created);
    if (!ts) {
        throw DataError("unparseable created_at '" + created + "'");
    }
    t.created_at = *ts;
    t.text = required_string("text");
    const std::string kind = required_string("kind");
    const auto parsed_kind = parse_tweet_kind(kind);
    if (!parsed_kind) {
        throw DataError("unknown kind '" + kind + "'");
    }
    t.kind = *parsed_kind;
    if (const auto it = j.find("text_translated"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw DataError("non-string text_translated");
        }
        t.text_translated = it->get<std::string>();
    }
    return t;
}

inline nlohmann::json to_json(const RawTweet& t) {
    nlohmann::json j{{"id", t.id},
                     {"author", t.author},
                     {"created_at", format_timestamp(t.created_at)},
                     {"text", t.text},
                     {"kind", to_string(t.kind)}};
    if (t.text_translated) {
        j["text_translated"] = *t.text_translated;
    }
    return j;
}

/// Reads a JSONL tweet dump. Malformed lines and duplicate ids are skipped and
/// tallied in `diag`; blank lines are ignored. An unreadable file throws.
inline std::vector<RawTweet> load_dump(const std::string& path, LoadDiagnostics* diag = nullptr) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read tweet dump: " + path);
    }
    LoadDiagnostics local;
    LoadDiagnostics& d = diag ? *diag : local;
    std::vector<RawTweet> tweets;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++d.lines;
        try {
            RawTweet t = parse_raw_tweet(nlohmann::json::parse(line));
            if (!seen.insert(t.id).second) {
                throw DataError("duplicate id '" + t.id + "'");
            }
            tweets.push_back(std::move(t));
            ++d.loaded;
        } catch (const std::exception& e) {
            ++d.skipped;
            d.messages.push_back(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (in.bad()) {
        throw DataError("I/O error while reading " + path);
    }
    return tweets;
}

/// Distinct authors in first-seen order.
inline std::vector<std::string> authors_of(const std::vector<RawTweet>& tweets) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& t : tweets) {
        if (seen.insert(t.author).second) {
            out.push_back(t.author);
        }
    }
    return out;
}

inline void sort_timeline(std::vector<CleanTweet>& tweets) {
    std::sort(tweets.begin(), tweets.end(), [](const CleanTweet& a, const CleanTweet& b) {
        if (a.created_at != b.created_at) {
            return a.created_at < b.created_at;
        }
        return a.id < b.id;
    });
}

/// Selects the author's tweets inside the window, cleans them and sorts by time.
/// With `use_translated` every selected tweet must carry a translation.
inline Timeline build_timeline(const std::vector<RawTweet>& tweets, const std::string& author,
                               const DatasetWindow& window, bool use_translated) {
    Timeline timeline{author, {}};
    for (const auto& t : tweets) {
        if (t.author != author || !window.contains(t.created_at)) {
            continue;
        }
        if (use_translated && !t.text_translated) {
            throw DataError("tweet '" + t.id + "' has no text_translated");
        }
        const std::string& source = use_translated ? *t.text_translated : t.text;
        auto cleaned = clean_text(source, t.kind);
        if (!cleaned) {
            continue;
        }
        const std::size_t words = text::count_words(*cleaned);
        timeline.tweets.push_back(CleanTweet{t.id, t.author, t.created_at, std::move(*cleaned), words});
    }
    sort_timeline(timeline.tweets);
    return timeline;
}

}  // namespace t2s
