#pragma once

// Statement catalog (sentence + topic per language) and ground-truth labels.

#include <charconv>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "t2s/common.hpp"
#include "t2s/csv.hpp"

namespace t2s {

struct StatementText {
    std::string sentence;
    std::string topic;

    friend bool operator==(const StatementText&, const StatementText&) = default;
};

struct Statement {
    int nr = 0;
    std::map<std::string, StatementText> texts;  // by language tag

    const StatementText& in(const std::string& lang) const {
        const auto it = texts.find(lang);
        if (it == texts.end()) {
            throw DataError("statement " + std::to_string(nr) + " has no text for language '" + lang + "'");
        }
        return it->second;
    }

    friend bool operator==(const Statement&, const Statement&) = default;
};

struct GroundTruth {
    std::string party;
    int statement_nr = 0;
    AgreementLabel label;
};

namespace detail {

inline int parse_int_field(const std::string& s, std::size_t line, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("line " + std::to_string(line) + ": " + what + " is not an integer: '" + s + "'");
    }
    return value;
}

}  // namespace detail

/// Groups `nr,lang,sentence,topic` records by statement number, sorted by nr.
/// Every statement must carry every language that appears in the input.
inline std::vector<Statement> parse_statements(const std::vector<csv::Record>& records) {
    std::map<int, Statement> by_nr;
    std::set<std::string> languages;
    for (const auto& rec : records) {
        if (rec.fields.size() != 4) {
            throw DataError("statements line " + std::to_string(rec.line) + ": expected 4 fields");
        }
        const int nr = detail::parse_int_field(rec.fields[0], rec.line, "nr");
        if (nr < 1) {
            throw DataError("statements line " + std::to_string(rec.line) + ": nr must be >= 1");
        }
        const std::string& lang = rec.fields[1];
        StatementText text{rec.fields[2], rec.fields[3]};
        if (lang.empty() || text.sentence.empty() || text.topic.empty()) {
            throw DataError("statements line " + std::to_string(rec.line) + ": empty lang, sentence or topic");
        }
        languages.insert(lang);
        Statement& st = by_nr[nr];
        st.nr = nr;
        if (!st.texts.emplace(lang, std::move(text)).second) {
            throw DataError("statements line " + std::to_string(rec.line) + ": duplicate (nr=" +
                            std::to_string(nr) + ", lang=" + lang + ")");
        }
    }
    std::vector<Statement> out;
    for (auto& [nr, st] : by_nr) {
        for (const auto& lang : languages) {
            if (!st.texts.contains(lang)) {
                throw DataError("statement " + std::to_string(nr) + " is missing language '" + lang + "'");
            }
        }
        out.push_back(std::move(st));
    }
    return out;
}

inline const csv::Row& statements_header() {
    static const csv::Row header{"nr", "lang", "sentence", "topic"};
    return header;
}

inline std::vector<Statement> load_statements(const std::string& path) {
    return parse_statements(csv::expect_header(csv::read_file(path), statements_header(), path));
}

inline std::string serialize_statements(const std::vector<Statement>& statements) {
    std::string out = csv::format_row(statements_header());
    for (const auto& st : statements) {
        for (const auto& [lang, text] : st.texts) {
            out += csv::format_row({std::to_string(st.nr), lang, text.sentence, text.topic});
        }
    }
    return out;
}

inline const Statement& find_statement(const std::vector<Statement>& statements, int nr) {
    for (const auto& st : statements) {
        if (st.nr == nr) {
            return st;
        }
    }
    throw DataError("unknown statement nr " + std::to_string(nr));
}

inline std::vector<GroundTruth> parse_ground_truth(const std::vector<csv::Record>& records) {
    std::vector<GroundTruth> out;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& rec : records) {
        const std::string where = "ground truth line " + std::to_string(rec.line);
        if (rec.fields.size() != 3) {
            throw DataError(where + ": expected 3 fields");
        }
        const int nr = detail::parse_int_field(rec.fields[1], rec.line, "statement_nr");
        const int label = detail::parse_int_field(rec.fields[2], rec.line, "label");
        if (label < AgreementLabel::kMin || label > AgreementLabel::kMax) {
            throw DataError(where + ": label " + std::to_string(label) + " outside 1..5");
        }
        if (rec.fields[0].empty()) {
            throw DataError(where + ": empty party");
        }
        if (!seen.emplace(rec.fields[0], nr).second) {
            throw DataError(where + ": duplicate (party=" + rec.fields[0] + ", statement_nr=" +
                            std::to_string(nr) + ")");
        }
        out.push_back(GroundTruth{rec.fields[0], nr, AgreementLabel(label)});
    }
    return out;
}

inline std::vector<GroundTruth> load_ground_truth(const std::string& path) {
    return parse_ground_truth(csv::expect_header(csv::read_file(path), {"party", "statement_nr", "label"}, path));
}

/// Distinct parties in first-seen order.
inline std::vector<std::string> parties_of(const std::vector<GroundTruth>& truth) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& g : truth) {
        if (seen.insert(g.party).second) {
            out.push_back(g.party);
        }
    }
    return out;
}

}  // namespace t2s
