#pragma once

// Zero-shot entailment scores: hypotheses, score matrices, the persistent
// score cache and the provider abstraction used to fill it.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "t2s/common.hpp"
#include "t2s/corpus.hpp"
#include "t2s/statements.hpp"

namespace t2s {

enum class LanguageMode { pivot_translated, source_language };

inline std::string_view to_string(LanguageMode mode) {
    return mode == LanguageMode::pivot_translated ? "pivot" : "source";
}

/// A zero-shot classifier configuration. The three built-in names have a fixed
/// language mode: BART reads translated tweets, the cross-lingual models read
/// the original text.
class ModelId {
public:
    ModelId(std::string name, LanguageMode mode) : name_(std::move(name)), mode_(mode) {
        if (name_.empty()) {
            throw DataError("empty model name");
        }
        if (const auto fixed = builtin_mode(name_); fixed && *fixed != mode_) {
            throw DataError("model " + name_ + " requires language mode '" + std::string(to_string(*fixed)) + "'");
        }
    }

    static std::optional<LanguageMode> builtin_mode(std::string_view name) {
        if (name == "BART") return LanguageMode::pivot_translated;
        if (name == "XRoberta_1" || name == "XRoberta_2") return LanguageMode::source_language;
        return std::nullopt;
    }

    /// "BART", "XRoberta_1", "XRoberta_2", or "<custom>@pivot" / "<custom>@source".
    static ModelId parse(std::string_view spec) {
        if (const auto at = spec.rfind('@'); at != std::string_view::npos) {
            const auto mode = spec.substr(at + 1);
            if (mode != "pivot" && mode != "source") {
                throw DataError("bad language mode in model '" + std::string(spec) + "'");
            }
            return {std::string(spec.substr(0, at)),
                    mode == "pivot" ? LanguageMode::pivot_translated : LanguageMode::source_language};
        }
        if (const auto mode = builtin_mode(spec)) {
            return {std::string(spec), *mode};
        }
        throw DataError("unknown model '" + std::string(spec) + "' (custom models need an @pivot or @source suffix)");
    }

    static std::vector<ModelId> builtins() {
        return {parse("BART"), parse("XRoberta_1"), parse("XRoberta_2")};
    }

    const std::string& name() const { return name_; }
    LanguageMode mode() const { return mode_; }
    bool uses_translation() const { return mode_ == LanguageMode::pivot_translated; }

    /// Identifier used in the cache and in reports.
    std::string key() const {
        return builtin_mode(name_) ? name_ : name_ + "@" + std::string(to_string(mode_));
    }

    friend bool operator==(const ModelId&, const ModelId&) = default;

private:
    std::string name_;
    LanguageMode mode_;
};

/// Which statement language pairs with which language mode, and the topic
/// templates per language ("{topic}" is the slot).
struct LanguageSettings {
    std::string pivot_lang = "en";
    std::string source_lang = "it";
    std::map<std::string, std::string> topic_templates{
        {"en", "This text is about {topic}."},
        {"it", "Questo testo parla di {topic}."},
    };

    const std::string& lang_for(LanguageMode mode) const {
        return mode == LanguageMode::pivot_translated ? pivot_lang : source_lang;
    }

    const std::string& template_for(const std::string& lang) const {
        const auto it = topic_templates.find(lang);
        if (it != topic_templates.end()) {
            return it->second;
        }
        return topic_templates.at(pivot_lang);
    }
};

enum class HypothesisKind { topic, sentence };

struct Hypothesis {
    std::string id;
    HypothesisKind kind = HypothesisKind::topic;
    std::string text;
};

inline std::string hypothesis_id(int statement_nr, HypothesisKind kind, const std::string& lang) {
    return "s" + std::to_string(statement_nr) + (kind == HypothesisKind::topic ? ".topic." : ".sentence.") + lang;
}

inline std::string apply_topic_template(std::string_view tmpl, std::string_view topic) {
    std::string out(tmpl);
    const auto slot = out.find("{topic}");
    if (slot == std::string::npos) {
        throw DataError("topic template lacks a {topic} slot: " + out);
    }
    out.replace(slot, 7, topic);
    return out;
}

/// "This text is about <topic>." in the pivot language; the configured template otherwise.
inline Hypothesis topic_hypothesis(const Statement& statement, const std::string& lang,
                                   const LanguageSettings& settings = {}) {
    const std::string& topic = statement.in(lang).topic;
    if (topic.empty()) {
        throw DataError("statement " + std::to_string(statement.nr) + " has an empty topic");
    }
    return {hypothesis_id(statement.nr, HypothesisKind::topic, lang), HypothesisKind::topic,
            apply_topic_template(settings.template_for(lang), topic)};
}

/// The statement sentence itself, verbatim.
inline Hypothesis sentence_hypothesis(const Statement& statement, const std::string& lang) {
    const std::string& sentence = statement.in(lang).sentence;
    if (sentence.empty()) {
        throw DataError("statement " + std::to_string(statement.nr) + " has an empty sentence");
    }
    return {hypothesis_id(statement.nr, HypothesisKind::sentence, lang), HypothesisKind::sentence, sentence};
}

inline bool is_valid_score(double s) { return std::isfinite(s) && s >= 0.0 && s <= 1.0; }

/// Scores of one model keyed by (tweet id, hypothesis id).
class ScoreMatrix {
public:
    ScoreMatrix() = default;
    explicit ScoreMatrix(std::string model_key) : model_(std::move(model_key)) {}

    const std::string& model() const { return model_; }

    void set(const std::string& tweet_id, const std::string& hypothesis_id, double score) {
        if (!is_valid_score(score)) {
            throw ProtocolError("score outside [0,1] for (" + tweet_id + ", " + hypothesis_id + ")");
        }
        scores_[key(tweet_id, hypothesis_id)] = score;
    }

    std::optional<double> get(const std::string& tweet_id, const std::string& hypothesis_id) const {
        const auto it = scores_.find(key(tweet_id, hypothesis_id));
        if (it == scores_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    double at(const std::string& tweet_id, const std::string& hypothesis_id) const {
        if (auto s = get(tweet_id, hypothesis_id)) {
            return *s;
        }
        throw MissingScoreError("no " + model_ + " score for (tweet " + tweet_id + ", " + hypothesis_id + ")");
    }

    std::size_t size() const { return scores_.size(); }
    bool empty() const { return scores_.empty(); }

    void merge(const ScoreMatrix& other) {
        for (const auto& [k, v] : other.scores_) {
            scores_[k] = v;
        }
    }

    /// Entries sorted by key, for deterministic comparison and output.
    std::vector<std::pair<std::string, double>> sorted_entries() const {
        std::vector<std::pair<std::string, double>> out(scores_.begin(), scores_.end());
        std::sort(out.begin(), out.end());
        return out;
    }

    friend bool operator==(const ScoreMatrix& a, const ScoreMatrix& b) {
        return a.model_ == b.model_ && a.scores_ == b.scores_;
    }

private:
    static std::string key(const std::string& tweet_id, const std::string& hypothesis_id) {
        std::string k;
        k.reserve(tweet_id.size() + hypothesis_id.size() + 1);
        k += tweet_id;
        k += '\x1f';
        k += hypothesis_id;
        return k;
    }

    std::string model_;
    std::unordered_map<std::string, double> scores_;
};

struct ScoreRecord {
    std::string tweet_id;
    std::string hypothesis_id;
    std::string model;
    double score = 0.0;
};

/// One cache/replay line: {"tweet_id", "hypothesis_id", "model", "score"} with
/// the score printed to 17 significant digits so it reads back bit-exactly.
inline std::string format_score_record(const ScoreRecord& r) {
    char num[40];
    std::snprintf(num, sizeof num, "%.17g", r.score);
    return "{\"tweet_id\":" + nlohmann::json(r.tweet_id).dump() +
           ",\"hypothesis_id\":" + nlohmann::json(r.hypothesis_id).dump() +
           ",\"model\":" + nlohmann::json(r.model).dump() + ",\"score\":" + num + "}";
}

inline ScoreRecord parse_score_record(std::string_view line) {
    const auto j = nlohmann::json::parse(line);
    ScoreRecord r{j.at("tweet_id").get<std::string>(), j.at("hypothesis_id").get<std::string>(),
                  j.at("model").get<std::string>(), j.at("score").get<double>()};
    if (!is_valid_score(r.score)) {
        throw DataError("score outside [0,1]");
    }
    return r;
}

/// Reads every valid record of a score JSONL file. Bad lines are reported in
/// `diag` and skipped.
inline void for_each_score_record(const std::filesystem::path& path, LoadDiagnostics& diag,
                                  const std::function<void(ScoreRecord&&)>& sink) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot read score file: " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++diag.lines;
        try {
            sink(parse_score_record(line));
            ++diag.loaded;
        } catch (const std::exception& e) {
            ++diag.skipped;
            diag.messages.push_back(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

/// Append-only JSONL score store in `<dir>/scores.jsonl`. Many readers, one
/// serialized writer; a later record for the same key wins.
class ScoreCache {
public:
    static constexpr const char* kFileName = "scores.jsonl";

    explicit ScoreCache(const std::filesystem::path& dir) : path_(dir / kFileName) {
        std::filesystem::create_directories(dir);
        if (std::filesystem::exists(path_)) {
            for_each_score_record(path_, diag_, [this](ScoreRecord&& r) {
                scores_[key(r.tweet_id, r.hypothesis_id, r.model)] = r.score;
            });
            needs_newline_ = !ends_with_newline(path_);
        }
        out_.open(path_, std::ios::app);
        if (!out_) {
            throw DataError("cannot open score cache for writing: " + path_.string());
        }
    }

    ScoreCache(const ScoreCache&) = delete;
    ScoreCache& operator=(const ScoreCache&) = delete;

    std::optional<double> get(const std::string& tweet_id, const std::string& hypothesis_id,
                              const std::string& model) const {
        std::shared_lock lock(mutex_);
        const auto it = scores_.find(key(tweet_id, hypothesis_id, model));
        if (it == scores_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    void put(const std::string& tweet_id, const std::string& hypothesis_id, const std::string& model,
             double score) {
        if (!is_valid_score(score)) {
            throw ProtocolError("refusing to cache score outside [0,1]");
        }
        const std::string line = format_score_record({tweet_id, hypothesis_id, model, score});
        std::unique_lock lock(mutex_);
        if (needs_newline_) {
            out_ << '\n';
            needs_newline_ = false;
        }
        out_ << line << '\n';
        out_.flush();
        if (!out_) {
            throw DataError("write failed on score cache " + path_.string());
        }
        scores_[key(tweet_id, hypothesis_id, model)] = score;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return scores_.size();
    }

    const LoadDiagnostics& diagnostics() const { return diag_; }
    const std::filesystem::path& path() const { return path_; }

private:
    static std::string key(const std::string& tweet_id, const std::string& hypothesis_id,
                           const std::string& model) {
        return tweet_id + '\x1f' + hypothesis_id + '\x1f' + model;
    }

    static bool ends_with_newline(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary | std::ios::ate);
        const auto size = static_cast<std::streamoff>(in.tellg());
        if (size <= 0) {
            return true;
        }
        in.seekg(size - 1);
        char c = 0;
        in.get(c);
        return c == '\n';
    }

    std::filesystem::path path_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, double> scores_;
    std::ofstream out_;
    bool needs_newline_ = false;
    LoadDiagnostics diag_;
};

struct ScorePair {
    std::string tweet_id;
    std::string hypothesis_id;
    std::string premise;
    std::string hypothesis;
};

/// Source of classifier scores C(premise, hypothesis). Implementations must be
/// safe to call from several threads at once.
class ScoreProvider {
public:
    virtual ~ScoreProvider() = default;
    /// One score per pair, aligned by index.
    virtual std::vector<double> score(const ModelId& model, std::span<const ScorePair> pairs) = 0;
};

/// Deterministic scores computed from (tweet id, hypothesis id). Without a
/// function the model key, tweet id and hypothesis id are hashed into [0,1].
class MockProvider final : public ScoreProvider {
public:
    using ScoreFn = std::function<double(const std::string& tweet_id, const std::string& hypothesis_id)>;

    MockProvider() = default;
    explicit MockProvider(ScoreFn fn) : fn_(std::move(fn)) {}

    std::vector<double> score(const ModelId& model, std::span<const ScorePair> pairs) override {
        requests_.fetch_add(1);
        pairs_scored_.fetch_add(pairs.size());
        const std::string prefix = model.key() + "/";
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
            out.push_back(fn_ ? fn_(p.tweet_id, p.hypothesis_id) : hash_score(prefix + p.tweet_id, p.hypothesis_id));
        }
        return out;
    }

    std::size_t requests() const { return requests_.load(); }
    std::size_t pairs_scored() const { return pairs_scored_.load(); }

    static double hash_score(const std::string& tweet_id, const std::string& hypothesis_id) {
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
        const auto mix = [&h](std::string_view s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
        };
        mix(tweet_id);
        mix("\x1f");
        mix(hypothesis_id);
        return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
    }

private:
    ScoreFn fn_;
    std::atomic<std::size_t> requests_{0};
    std::atomic<std::size_t> pairs_scored_{0};
};

/// Serves scores from a previously recorded score file; a miss is an error.
class FileReplayProvider final : public ScoreProvider {
public:
    explicit FileReplayProvider(const std::filesystem::path& path) {
        for_each_score_record(path, diag_, [this](ScoreRecord&& r) {
            scores_[r.model].set(r.tweet_id, r.hypothesis_id, r.score);
        });
    }

    std::vector<double> score(const ModelId& model, std::span<const ScorePair> pairs) override {
        const auto it = scores_.find(model.key());
        std::vector<double> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
            std::optional<double> s;
            if (it != scores_.end()) {
                s = it->second.get(p.tweet_id, p.hypothesis_id);
            }
            if (!s) {
                throw MissingScoreError("replay file has no " + model.key() + " score for (" + p.tweet_id +
                                        ", " + p.hypothesis_id + ")");
            }
            out.push_back(*s);
        }
        return out;
    }

    const LoadDiagnostics& diagnostics() const { return diag_; }

private:
    std::map<std::string, ScoreMatrix> scores_;
    LoadDiagnostics diag_;
};

struct ScoreOptions {
    std::size_t batch_size = 16;
    std::size_t parallelism = 1;
};

struct ScoreStats {
    std::size_t cache_hits = 0;
    std::size_t provider_pairs = 0;
    std::size_t provider_requests = 0;
};

namespace detail {

inline std::string describe_pairs(const std::vector<ScorePair>& pairs, std::size_t limit = 10) {
    std::string out;
    for (std::size_t i = 0; i < pairs.size() && i < limit; ++i) {
        out += (i ? ", (" : "(") + pairs[i].tweet_id + ", " + pairs[i].hypothesis_id + ")";
    }
    if (pairs.size() > limit) {
        out += " and " + std::to_string(pairs.size() - limit) + " more";
    }
    return out;
}

}  // namespace detail

/// Scores every (premise, hypothesis) pair. The cache is consulted first and
/// only misses go to the provider, in batches of `batch_size` spread over
/// `parallelism` workers. Fresh scores are written to the cache as soon as
/// each batch completes, so a failure keeps everything scored so far.
inline ScoreMatrix score_batch(ScoreProvider& provider, const ModelId& model,
                               std::span<const CleanTweet> premises, std::span<const Hypothesis> hypotheses,
                               ScoreCache* cache = nullptr, const ScoreOptions& options = {},
                               ScoreStats* stats = nullptr) {
    const std::string model_key = model.key();
    ScoreMatrix matrix(model_key);
    std::vector<ScorePair> misses;
    ScoreStats local_stats;
    for (const auto& tweet : premises) {
        for (const auto& hyp : hypotheses) {
            if (matrix.get(tweet.id, hyp.id)) {
                continue;
            }
            if (cache) {
                if (auto cached = cache->get(tweet.id, hyp.id, model_key)) {
                    matrix.set(tweet.id, hyp.id, *cached);
                    ++local_stats.cache_hits;
                    continue;
                }
            }
            misses.push_back({tweet.id, hyp.id, tweet.text, hyp.text});
            matrix.set(tweet.id, hyp.id, 0.0);  // placeholder, overwritten below
        }
    }

    const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
    const std::size_t batches = (misses.size() + batch_size - 1) / batch_size;
    std::vector<std::vector<double>> results(batches);
    std::vector<std::exception_ptr> errors(batches);
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        for (std::size_t b = next.fetch_add(1); b < batches; b = next.fetch_add(1)) {
            const std::size_t lo = b * batch_size;
            const std::size_t hi = std::min(misses.size(), lo + batch_size);
            const std::span<const ScorePair> chunk(misses.data() + lo, hi - lo);
            try {
                auto scores = provider.score(model, chunk);
                if (scores.size() != chunk.size()) {
                    throw ProtocolError("provider returned " + std::to_string(scores.size()) + " scores for " +
                                        std::to_string(chunk.size()) + " pairs");
                }
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    if (!is_valid_score(scores[i])) {
                        throw ProtocolError("provider returned score " + std::to_string(scores[i]) +
                                            " outside [0,1] for (" + chunk[i].tweet_id + ", " +
                                            chunk[i].hypothesis_id + ")");
                    }
                }
                if (cache) {
                    for (std::size_t i = 0; i < scores.size(); ++i) {
                        cache->put(chunk[i].tweet_id, chunk[i].hypothesis_id, model_key, scores[i]);
                    }
                }
                results[b] = std::move(scores);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(1, options.parallelism), batches);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) {
            pool.emplace_back(worker);
        }
    }

    std::vector<ScorePair> unmet;
    std::string first_failure;
    bool only_missing = true;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * batch_size;
        const std::size_t hi = std::min(misses.size(), lo + batch_size);
        if (errors[b]) {
            try {
                std::rethrow_exception(errors[b]);
            } catch (const ProtocolError&) {
                throw;
            } catch (const MissingScoreError& e) {
                if (first_failure.empty()) {
                    first_failure = e.what();
                }
            } catch (const std::exception& e) {
                only_missing = false;
                if (first_failure.empty()) {
                    first_failure = e.what();
                }
            }
            unmet.insert(unmet.end(), misses.begin() + static_cast<std::ptrdiff_t>(lo),
                         misses.begin() + static_cast<std::ptrdiff_t>(hi));
            continue;
        }
        for (std::size_t i = lo; i < hi; ++i) {
            matrix.set(misses[i].tweet_id, misses[i].hypothesis_id, results[b][i - lo]);
        }
    }
    local_stats.provider_pairs = misses.size() - unmet.size();
    local_stats.provider_requests = batches;
    if (stats) {
        *stats = local_stats;
    }
    if (!unmet.empty()) {
        if (only_missing) {
            throw MissingScoreError("no score for " + std::to_string(unmet.size()) + " pair(s): " +
                                    detail::describe_pairs(unmet) + "; first error: " + first_failure);
        }
        throw ProviderError("scoring failed for " + std::to_string(unmet.size()) + " pair(s): " +
                            detail::describe_pairs(unmet) + "; first error: " + first_failure);
    }
    return matrix;
}

}  // namespace t2s
