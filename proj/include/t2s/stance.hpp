#pragma once

// Topic filtering and the four agreement-prediction algorithms.
//
// Every algorithm sees the in-topic tweets of one (party, statement) pair as
// aligned topic scores t_i and sentence scores s_i, and returns a label in
// 1..5. An empty in-topic set means "no evidence" and yields the neutral 3.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "t2s/common.hpp"
#include "t2s/corpus.hpp"
#include "t2s/scoring.hpp"
#include "t2s/statements.hpp"

namespace t2s {

struct InTopicSet {
    std::vector<std::string> tweet_ids;
    std::vector<double> topic_scores;
    std::vector<double> sentence_scores;

    std::size_t size() const { return tweet_ids.size(); }
    bool empty() const { return tweet_ids.empty(); }
};

enum class Algorithm { alg1, alg2, alg3, alg4 };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::alg1: return "alg1";
        case Algorithm::alg2: return "alg2";
        case Algorithm::alg3: return "alg3";
        case Algorithm::alg4: return "alg4";
    }
    return "alg1";
}

inline Algorithm parse_algorithm(std::string_view s) {
    if (s == "alg1" || s == "Alg1") return Algorithm::alg1;
    if (s == "alg2" || s == "Alg2") return Algorithm::alg2;
    if (s == "alg3" || s == "Alg3") return Algorithm::alg3;
    if (s == "alg4" || s == "Alg4") return Algorithm::alg4;
    throw DataError("unknown algorithm '" + std::string(s) + "'");
}

inline constexpr std::array<Algorithm, 4> kAllAlgorithms{Algorithm::alg1, Algorithm::alg2, Algorithm::alg3,
                                                         Algorithm::alg4};

inline constexpr int kDefaultMinSupport = 3;

struct PredictorConfig {
    ModelId model = ModelId::parse("BART");
    DatasetWindow window = DatasetWindow::named("D4");
    Algorithm algorithm = Algorithm::alg3;
    double threshold = 0.6;
    int min_support = kDefaultMinSupport;  // Alg4 only
    bool alg1_swap_weights = false;

    void validate() const {
        if (!(threshold >= 0.0 && threshold <= 1.0)) {
            throw DataError("threshold must lie in [0,1], got " + std::to_string(threshold));
        }
        if (min_support < 1) {
            throw DataError("min_support must be >= 1, got " + std::to_string(min_support));
        }
    }
};

struct PredictionRecord {
    std::string party;
    int statement_nr = 0;
    AgreementLabel label;
    std::size_t in_topic_count = 0;
};

namespace detail {

inline void check_score(double s) {
    if (!is_valid_score(s)) {
        throw DataError("score outside [0,1]: " + std::to_string(s));
    }
}

}  // namespace detail

/// Five bins, left-closed: [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1].
inline int map_m1(double score) {
    detail::check_score(score);
    if (score < 0.2) return 1;
    if (score < 0.4) return 2;
    if (score < 0.6) return 3;
    if (score < 0.8) return 4;
    return 5;
}

/// Four bins, left-closed: [0,.25) [.25,.5) [.5,.75) [.75,1].
inline int map_m2(double score) {
    detail::check_score(score);
    if (score < 0.25) return 1;
    if (score < 0.5) return 2;
    if (score < 0.75) return 3;
    return 4;
}

/// Nearest integer to sum/count for positive operands, halves rounded up
/// (away from zero). Exact: no floating point involved.
inline int rounded_mean(long long sum, long long count) { return static_cast<int>((2 * sum + count) / (2 * count)); }

namespace detail {

/// Unique most-voted label, or the rounded mean of all labels when the
/// maximum vote count is shared. `labels` must be nonempty.
inline int majority_or_mean(std::span<const int> labels) {
    std::array<int, 6> votes{};
    long long sum = 0;
    for (int l : labels) {
        ++votes[static_cast<std::size_t>(l)];
        sum += l;
    }
    const int top = *std::max_element(votes.begin(), votes.end());
    int winners = 0;
    int winner = 0;
    for (int l = 1; l <= 5; ++l) {
        if (votes[static_cast<std::size_t>(l)] == top) {
            ++winners;
            winner = l;
        }
    }
    if (winners == 1) {
        return winner;
    }
    return rounded_mean(sum, static_cast<long long>(labels.size()));
}

template <typename Map>
std::vector<int> map_all(std::span<const double> scores, Map map) {
    std::vector<int> labels;
    labels.reserve(scores.size());
    for (double s : scores) {
        labels.push_back(map(s));
    }
    return labels;
}

}  // namespace detail

/// Keeps the tweets whose topic score is >= th, in timeline order, with their
/// topic and sentence scores attached.
inline InTopicSet filter_topic(const ScoreMatrix& matrix, const Timeline& timeline, const Hypothesis& topic_hyp,
                               const Hypothesis& sentence_hyp, double th) {
    InTopicSet out;
    for (const auto& tweet : timeline.tweets) {
        const double topic = matrix.at(tweet.id, topic_hyp.id);
        const double sentence = matrix.at(tweet.id, sentence_hyp.id);
        if (topic >= th) {
            out.tweet_ids.push_back(tweet.id);
            out.topic_scores.push_back(topic);
            out.sentence_scores.push_back(sentence);
        }
    }
    return out;
}

/// M1 of the mean of topic scores weighted by sentence scores:
/// sum(s_i * t_i) / sum(s_i). With `swap_weights` the sentence scores are the
/// values and the topic scores the weights. A zero weight sum yields 3.
inline AgreementLabel alg1(std::span<const double> topic_scores, std::span<const double> sentence_scores,
                           bool swap_weights = false) {
    if (topic_scores.size() != sentence_scores.size()) {
        throw DataError("alg1: topic and sentence scores differ in length");
    }
    if (topic_scores.empty()) {
        return AgreementLabel::neutral();
    }
    std::vector<std::pair<double, double>> weighted;  // (weight, value)
    weighted.reserve(topic_scores.size());
    for (std::size_t i = 0; i < topic_scores.size(); ++i) {
        detail::check_score(topic_scores[i]);
        detail::check_score(sentence_scores[i]);
        if (swap_weights) {
            weighted.emplace_back(topic_scores[i], sentence_scores[i]);
        } else {
            weighted.emplace_back(sentence_scores[i], topic_scores[i]);
        }
    }
    // summation order fixed by value so the result does not depend on tweet order
    std::sort(weighted.begin(), weighted.end());
    double numerator = 0.0;
    double denominator = 0.0;
    for (const auto& [w, v] : weighted) {
        numerator += w * v;
        denominator += w;
    }
    if (denominator == 0.0) {
        return AgreementLabel::neutral();
    }
    // a mean that is exactly on a bin edge in decimal can land one ulp below it
    const double mean = std::round(numerator / denominator * 1e12) / 1e12;
    return AgreementLabel(map_m1(std::clamp(mean, 0.0, 1.0)));
}

inline AgreementLabel alg1(const InTopicSet& in_topic, bool swap_weights = false) {
    return alg1(in_topic.topic_scores, in_topic.sentence_scores, swap_weights);
}

/// Rounded mean of the per-tweet M1 labels.
inline AgreementLabel alg2(std::span<const double> sentence_scores) {
    if (sentence_scores.empty()) {
        return AgreementLabel::neutral();
    }
    const auto labels = detail::map_all(sentence_scores, map_m1);
    long long sum = 0;
    for (int l : labels) {
        sum += l;
    }
    return AgreementLabel(rounded_mean(sum, static_cast<long long>(labels.size())));
}

inline AgreementLabel alg2(const InTopicSet& in_topic) { return alg2(in_topic.sentence_scores); }

/// Majority vote over per-tweet M1 labels; a tied maximum falls back to the rounded mean.
inline AgreementLabel alg3(std::span<const double> sentence_scores) {
    if (sentence_scores.empty()) {
        return AgreementLabel::neutral();
    }
    const auto labels = detail::map_all(sentence_scores, map_m1);
    return AgreementLabel(detail::majority_or_mean(labels));
}

inline AgreementLabel alg3(const InTopicSet& in_topic) { return alg3(in_topic.sentence_scores); }

/// Alg3 over the four-level M2 labels, run only with at least `min_support`
/// in-topic tweets (otherwise 3). The result a in 1..4 maps back onto the
/// five-level scale with 3 -> 4 and 4 -> 5, so a non-neutral answer is forced.
inline AgreementLabel alg4(std::span<const double> sentence_scores, int min_support) {
    if (min_support < 1) {
        throw DataError("alg4: min_support must be >= 1");
    }
    if (sentence_scores.size() < static_cast<std::size_t>(min_support)) {
        return AgreementLabel::neutral();
    }
    const auto labels = detail::map_all(sentence_scores, map_m2);
    const int a = detail::majority_or_mean(labels);
    return AgreementLabel(a <= 2 ? a : a + 1);
}

inline AgreementLabel alg4(const InTopicSet& in_topic, int min_support) {
    return alg4(in_topic.sentence_scores, min_support);
}

inline AgreementLabel apply_algorithm(const PredictorConfig& config, std::span<const double> topic_scores,
                                      std::span<const double> sentence_scores) {
    switch (config.algorithm) {
        case Algorithm::alg1: return alg1(topic_scores, sentence_scores, config.alg1_swap_weights);
        case Algorithm::alg2: return alg2(sentence_scores);
        case Algorithm::alg3: return alg3(sentence_scores);
        case Algorithm::alg4: return alg4(sentence_scores, config.min_support);
    }
    return AgreementLabel::neutral();
}

/// Topic filtering followed by the configured algorithm for one timeline and statement.
/// The hypotheses are built in the language the model reads.
inline PredictionRecord predict(const Timeline& timeline, const Statement& statement, const ScoreMatrix& matrix,
                                const PredictorConfig& config, const LanguageSettings& languages = {}) {
    config.validate();
    const std::string& lang = languages.lang_for(config.model.mode());
    const auto topic_hyp = topic_hypothesis(statement, lang, languages);
    const auto sentence_hyp = sentence_hypothesis(statement, lang);
    const auto in_topic = filter_topic(matrix, timeline, topic_hyp, sentence_hyp, config.threshold);
    return {timeline.author, statement.nr,
            apply_algorithm(config, in_topic.topic_scores, in_topic.sentence_scores), in_topic.size()};
}

}  // namespace t2s
