#pragma once

// Metrics, the experiment grid and report generation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "t2s/common.hpp"
#include "t2s/corpus.hpp"
#include "t2s/csv.hpp"
#include "t2s/parallel.hpp"
#include "t2s/scoring.hpp"
#include "t2s/stance.hpp"
#include "t2s/statements.hpp"

namespace t2s {

struct EvalPair {
    AgreementLabel predicted;
    AgreementLabel truth;
    std::string party;
    int statement_nr = 0;
};

/// Mean absolute error between predicted and true labels.
inline double mae(std::span<const EvalPair> pairs) {
    if (pairs.empty()) {
        throw DataError("mae of an empty set");
    }
    long long total = 0;
    for (const auto& p : pairs) {
        total += std::abs(p.predicted.value() - p.truth.value());
    }
    return static_cast<double>(total) / static_cast<double>(pairs.size());
}

/// Per-class F1 over labels 1..5 averaged with weights proportional to the
/// true-label support. A class with no true instances has weight 0; a class
/// with precision + recall = 0 has F1 = 0.
inline double f1_weighted(std::span<const EvalPair> pairs) {
    if (pairs.empty()) {
        throw DataError("f1_weighted of an empty set");
    }
    std::array<long long, 6> tp{}, predicted{}, support{};
    for (const auto& p : pairs) {
        const auto pv = static_cast<std::size_t>(p.predicted.value());
        const auto tv = static_cast<std::size_t>(p.truth.value());
        ++predicted[pv];
        ++support[tv];
        if (pv == tv) {
            ++tp[pv];
        }
    }
    double weighted = 0.0;
    for (std::size_t c = 1; c <= 5; ++c) {
        if (support[c] == 0 || tp[c] == 0) {
            continue;
        }
        // F1 = 2 TP / (|predicted c| + |true c|)
        const double f1 = 2.0 * static_cast<double>(tp[c]) / static_cast<double>(predicted[c] + support[c]);
        weighted += f1 * static_cast<double>(support[c]);
    }
    return weighted / static_cast<double>(pairs.size());
}

/// Axes of the parameter search. `min_support` applies to Alg4 points.
struct GridSpec {
    std::vector<ModelId> models;
    std::vector<DatasetWindow> windows;
    std::vector<Algorithm> algorithms;
    std::vector<double> thresholds;
    int min_support = kDefaultMinSupport;
    bool alg1_swap_weights = false;

    static std::vector<double> default_thresholds() { return {0.5, 0.6, 0.7, 0.8, 0.9}; }

    /// 3 models x 4 windows x 4 algorithms x 5 thresholds.
    static GridSpec full() {
        return {ModelId::builtins(), DatasetWindow::all_named(),
                std::vector<Algorithm>(kAllAlgorithms.begin(), kAllAlgorithms.end()), default_thresholds()};
    }

    void validate() const {
        if (models.empty() || windows.empty() || algorithms.empty() || thresholds.empty()) {
            throw DataError("every grid axis needs at least one value");
        }
        for (const auto& c : configs()) {
            c.validate();
        }
    }

    /// Enumerated model-major, then window, algorithm, threshold.
    std::vector<PredictorConfig> configs() const {
        std::vector<PredictorConfig> out;
        for (const auto& m : models) {
            for (const auto& w : windows) {
                for (auto a : algorithms) {
                    for (double th : thresholds) {
                        out.push_back(PredictorConfig{m, w, a, th, min_support, alg1_swap_weights});
                    }
                }
            }
        }
        return out;
    }
};

struct GridPoint {
    PredictorConfig config;
    double mae = 0.0;
    double f1_weighted = 0.0;
    std::size_t n_pairs = 0;
};

/// MAE ascending, then F1 descending; equal points keep enumeration order.
inline void rank_grid(std::vector<GridPoint>& points) {
    std::stable_sort(points.begin(), points.end(), [](const GridPoint& a, const GridPoint& b) {
        if (a.mae != b.mae) {
            return a.mae < b.mae;
        }
        return a.f1_weighted > b.f1_weighted;
    });
}

/// Tweets, statements, ground truth and per-model scores for one study.
/// The universe of (party, statement) cells is the ground truth.
class Experiment {
public:
    Experiment(std::vector<RawTweet> tweets, std::vector<Statement> statements, std::vector<GroundTruth> truth,
               std::map<std::string, ScoreMatrix> scores_by_model, LanguageSettings languages = {})
        : tweets_(std::move(tweets)),
          statements_(std::move(statements)),
          truth_(std::move(truth)),
          scores_(std::move(scores_by_model)),
          languages_(std::move(languages)),
          parties_(parties_of(truth_)) {
        for (const auto& g : truth_) {
            find_statement(statements_, g.statement_nr);
        }
    }

    const std::vector<GroundTruth>& truth() const { return truth_; }
    const std::vector<Statement>& statements() const { return statements_; }
    const std::vector<std::string>& parties() const { return parties_; }
    const LanguageSettings& languages() const { return languages_; }

    const ScoreMatrix& scores_for(const ModelId& model) const {
        const auto it = scores_.find(model.key());
        if (it == scores_.end()) {
            throw MissingScoreError("no scores loaded for model " + model.key());
        }
        return it->second;
    }

    std::map<std::string, Timeline> timelines(const DatasetWindow& window, LanguageMode mode) const {
        std::map<std::string, Timeline> out;
        for (const auto& party : parties_) {
            out.emplace(party, build_timeline(tweets_, party, window, mode == LanguageMode::pivot_translated));
        }
        return out;
    }

    /// Throws MissingScoreError listing every (model, tweet, hypothesis) the
    /// given models and windows would need but the score matrices lack.
    void check_coverage(const std::vector<ModelId>& models, const std::vector<DatasetWindow>& windows) const {
        std::set<std::string> gaps;
        std::size_t gap_count = 0;
        for (const auto& model : models) {
            const auto it = scores_.find(model.key());
            std::set<std::string> union_tweets;
            for (const auto& w : windows) {
                for (const auto& [party, tl] : timelines(w, model.mode())) {
                    for (const auto& t : tl.tweets) {
                        union_tweets.insert(t.id);
                    }
                }
            }
            const std::string& lang = languages_.lang_for(model.mode());
            std::set<int> nrs;
            for (const auto& g : truth_) {
                nrs.insert(g.statement_nr);
            }
            for (int nr : nrs) {
                const auto& st = find_statement(statements_, nr);
                for (const auto& hyp : {topic_hypothesis(st, lang, languages_), sentence_hypothesis(st, lang)}) {
                    for (const auto& id : union_tweets) {
                        if (it == scores_.end() || !it->second.get(id, hyp.id)) {
                            if (++gap_count <= 20) {
                                gaps.insert(model.key() + ":(" + id + ", " + hyp.id + ")");
                            }
                        }
                    }
                }
            }
        }
        if (gap_count > 0) {
            std::string msg = std::to_string(gap_count) + " missing score(s):";
            for (const auto& g : gaps) {
                msg += " " + g;
            }
            if (gap_count > gaps.size()) {
                msg += " ...";
            }
            throw MissingScoreError(msg);
        }
    }

    /// Aligned per-cell score vectors for one (model, window), in ground-truth order.
    struct CellScores {
        std::vector<double> topic;
        std::vector<double> sentence;
    };

    std::vector<CellScores> score_cells(const ModelId& model, const DatasetWindow& window) const {
        const ScoreMatrix& matrix = scores_for(model);
        const auto tls = timelines(window, model.mode());
        const std::string& lang = languages_.lang_for(model.mode());
        std::vector<CellScores> cells;
        cells.reserve(truth_.size());
        for (const auto& g : truth_) {
            const auto& st = find_statement(statements_, g.statement_nr);
            const auto topic_hyp = topic_hypothesis(st, lang, languages_);
            const auto sentence_hyp = sentence_hypothesis(st, lang);
            CellScores cell;
            for (const auto& t : tls.at(g.party).tweets) {
                cell.topic.push_back(matrix.at(t.id, topic_hyp.id));
                cell.sentence.push_back(matrix.at(t.id, sentence_hyp.id));
            }
            cells.push_back(std::move(cell));
        }
        return cells;
    }

    static std::vector<PredictionRecord> predict_cells(const std::vector<GroundTruth>& truth,
                                                       const std::vector<CellScores>& cells,
                                                       const PredictorConfig& config) {
        std::vector<PredictionRecord> out;
        out.reserve(truth.size());
        std::vector<double> topic, sentence;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            topic.clear();
            sentence.clear();
            for (std::size_t k = 0; k < cells[i].topic.size(); ++k) {
                if (cells[i].topic[k] >= config.threshold) {
                    topic.push_back(cells[i].topic[k]);
                    sentence.push_back(cells[i].sentence[k]);
                }
            }
            out.push_back({truth[i].party, truth[i].statement_nr, apply_algorithm(config, topic, sentence),
                           topic.size()});
        }
        return out;
    }

    /// One prediction per ground-truth cell.
    std::vector<PredictionRecord> predict_all(const PredictorConfig& config) const {
        config.validate();
        check_coverage({config.model}, {config.window});
        return predict_cells(truth_, score_cells(config.model, config.window), config);
    }

    std::vector<EvalPair> pair_with_truth(const std::vector<PredictionRecord>& predictions) const {
        std::vector<EvalPair> pairs;
        pairs.reserve(predictions.size());
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            pairs.push_back({predictions[i].label, truth_[i].label, truth_[i].party, truth_[i].statement_nr});
        }
        return pairs;
    }

    /// Evaluates every grid configuration. Coverage is checked up front; the
    /// result is ranked by (MAE asc, F1 desc).
    std::vector<GridPoint> run_grid(const GridSpec& spec, std::size_t jobs = 1) const {
        spec.validate();
        if (truth_.empty()) {
            throw DataError("ground truth is empty");
        }
        check_coverage(spec.models, spec.windows);
        const auto configs = spec.configs();
        std::vector<GridPoint> points(configs.size());
        const std::size_t per_block = spec.algorithms.size() * spec.thresholds.size();
        for (std::size_t block = 0; block * per_block < configs.size(); ++block) {
            const auto& first = configs[block * per_block];
            const auto cells = score_cells(first.model, first.window);
            parallel_for(per_block, jobs, [&](std::size_t k) {
                const auto& config = configs[block * per_block + k];
                const auto pairs = pair_with_truth(predict_cells(truth_, cells, config));
                points[block * per_block + k] = GridPoint{config, mae(pairs), f1_weighted(pairs), pairs.size()};
            });
        }
        rank_grid(points);
        return points;
    }

private:
    std::vector<RawTweet> tweets_;
    std::vector<Statement> statements_;
    std::vector<GroundTruth> truth_;
    std::map<std::string, ScoreMatrix> scores_;
    LanguageSettings languages_;
    std::vector<std::string> parties_;
};

struct Metrics {
    double mae = 0.0;
    double f1_weighted = 0.0;
    std::size_t n_pairs = 0;
};

inline Metrics metrics_of(std::span<const EvalPair> pairs) { return {mae(pairs), f1_weighted(pairs), pairs.size()}; }

struct ReportCell {
    int predicted = 0;
    int truth = 0;
    int abs_error = 0;
    std::size_t in_topic_count = 0;
};

struct EvalReport {
    std::string method;                     // e.g. "BART/D4/alg3/th=0.6" or "baseline:predict3"
    std::optional<PredictorConfig> config;  // absent for baselines
    Metrics overall;
    std::map<std::string, Metrics> per_party;
    std::vector<std::string> parties;  // ground-truth order
    std::vector<int> statement_nrs;    // ascending
    std::map<std::pair<std::string, int>, ReportCell> cells;
};

inline std::string describe(const PredictorConfig& c) {
    char th[32];
    std::snprintf(th, sizeof th, "%g", c.threshold);
    std::string out = c.model.key() + "/" + c.window.name() + "/" + std::string(to_string(c.algorithm)) + "/th=" + th;
    if (c.algorithm == Algorithm::alg4) {
        out += "/m=" + std::to_string(c.min_support);
    }
    return out;
}

/// Joins predictions with the ground truth. Every ground-truth cell needs a prediction.
inline EvalReport build_report(const std::vector<PredictionRecord>& predictions,
                               const std::vector<GroundTruth>& truth, std::string method,
                               std::optional<PredictorConfig> config = std::nullopt) {
    std::map<std::pair<std::string, int>, const PredictionRecord*> by_cell;
    for (const auto& p : predictions) {
        by_cell[{p.party, p.statement_nr}] = &p;
    }
    EvalReport report;
    report.method = std::move(method);
    report.config = std::move(config);
    report.parties = parties_of(truth);
    std::set<int> nrs;
    std::vector<EvalPair> all;
    std::map<std::string, std::vector<EvalPair>> by_party;
    std::vector<std::string> missing;
    for (const auto& g : truth) {
        nrs.insert(g.statement_nr);
        const auto it = by_cell.find({g.party, g.statement_nr});
        if (it == by_cell.end()) {
            missing.push_back("(" + g.party + ", " + std::to_string(g.statement_nr) + ")");
            continue;
        }
        const PredictionRecord& p = *it->second;
        EvalPair pair{p.label, g.label, g.party, g.statement_nr};
        all.push_back(pair);
        by_party[g.party].push_back(pair);
        report.cells[{g.party, g.statement_nr}] =
            ReportCell{p.label.value(), g.label.value(), std::abs(p.label.value() - g.label.value()), p.in_topic_count};
    }
    if (!missing.empty()) {
        std::string msg = "predictions do not cover " + std::to_string(missing.size()) + " ground-truth cell(s):";
        for (const auto& m : missing) {
            msg += " " + m;
        }
        throw DataError(msg);
    }
    report.statement_nrs.assign(nrs.begin(), nrs.end());
    if (!all.empty()) {
        report.overall = metrics_of(all);
    }
    for (const auto& [party, pairs] : by_party) {
        report.per_party[party] = metrics_of(pairs);
    }
    return report;
}

inline nlohmann::json config_to_json(const PredictorConfig& c) {
    return {{"model", c.model.key()},
            {"window", c.window.name()},
            {"algorithm", to_string(c.algorithm)},
            {"threshold", c.threshold},
            {"m", c.min_support},
            {"alg1_swap_weights", c.alg1_swap_weights}};
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"mae", m.mae}, {"f1_weighted", m.f1_weighted}, {"n_pairs", m.n_pairs}};
}

/// Full-precision JSON rendering of a report.
inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["config"] = r.config ? config_to_json(*r.config) : nlohmann::json(nullptr);
    j["overall"] = metrics_to_json(r.overall);
    j["per_party"] = nlohmann::json::object();
    for (const auto& party : r.parties) {
        if (const auto it = r.per_party.find(party); it != r.per_party.end()) {
            j["per_party"][party] = metrics_to_json(it->second);
        }
    }
    j["parties"] = r.parties;
    j["statements"] = r.statement_nrs;
    nlohmann::json errors = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& party : r.parties) {
        for (int nr : r.statement_nrs) {
            const auto it = r.cells.find({party, nr});
            if (it == r.cells.end()) {
                continue;
            }
            const auto& c = it->second;
            errors[party][std::to_string(nr)] = c.abs_error;
            counts[party][std::to_string(nr)] = c.in_topic_count;
            cells.push_back({{"party", party},
                             {"statement_nr", nr},
                             {"predicted", c.predicted},
                             {"truth", c.truth},
                             {"abs_error", c.abs_error},
                             {"in_topic_count", c.in_topic_count}});
        }
    }
    j["abs_error"] = std::move(errors);
    j["in_topic_count"] = std::move(counts);
    j["cells"] = std::move(cells);
    return j;
}

inline std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

/// Per-party metrics followed by an "ALL" row, 4 decimals.
inline std::string report_to_csv(const EvalReport& r) {
    std::string out = csv::format_row({"party", "mae", "f1_weighted", "n_pairs"});
    for (const auto& party : r.parties) {
        if (const auto it = r.per_party.find(party); it != r.per_party.end()) {
            const auto& m = it->second;
            out += csv::format_row({party, fixed4(m.mae), fixed4(m.f1_weighted), std::to_string(m.n_pairs)});
        }
    }
    out += csv::format_row(
        {"ALL", fixed4(r.overall.mae), fixed4(r.overall.f1_weighted), std::to_string(r.overall.n_pairs)});
    return out;
}

/// party x statement matrix; `value` picks the cell field. Absent cells are empty.
template <typename Value>
std::string cell_matrix_csv(const EvalReport& r, Value value) {
    csv::Row header{"party"};
    for (int nr : r.statement_nrs) {
        header.push_back(std::to_string(nr));
    }
    std::string out = csv::format_row(header);
    for (const auto& party : r.parties) {
        csv::Row row{party};
        for (int nr : r.statement_nrs) {
            const auto it = r.cells.find({party, nr});
            row.push_back(it == r.cells.end() ? "" : std::to_string(value(it->second)));
        }
        out += csv::format_row(row);
    }
    return out;
}

inline std::string grid_to_csv(const std::vector<GridPoint>& points) {
    std::string out = csv::format_row({"model", "window", "algorithm", "threshold", "m", "mae", "f1_weighted", "n_pairs"});
    for (const auto& p : points) {
        char th[32];
        std::snprintf(th, sizeof th, "%g", p.config.threshold);
        out += csv::format_row({p.config.model.key(), p.config.window.name(), std::string(to_string(p.config.algorithm)),
                                th, std::to_string(p.config.min_support), fixed4(p.mae), fixed4(p.f1_weighted),
                                std::to_string(p.n_pairs)});
    }
    return out;
}

inline std::string predictions_to_csv(const std::vector<PredictionRecord>& predictions) {
    std::string out = csv::format_row({"party", "statement_nr", "label", "in_topic_count"});
    for (const auto& p : predictions) {
        out += csv::format_row(
            {p.party, std::to_string(p.statement_nr), std::to_string(p.label.value()), std::to_string(p.in_topic_count)});
    }
    return out;
}

inline std::vector<PredictionRecord> parse_predictions(const std::vector<csv::Record>& records) {
    std::vector<PredictionRecord> out;
    for (const auto& rec : records) {
        if (rec.fields.size() != 4) {
            throw DataError("predictions line " + std::to_string(rec.line) + ": expected 4 fields");
        }
        const int nr = detail::parse_int_field(rec.fields[1], rec.line, "statement_nr");
        const int label = detail::parse_int_field(rec.fields[2], rec.line, "label");
        const int count = detail::parse_int_field(rec.fields[3], rec.line, "in_topic_count");
        if (label < 1 || label > 5 || count < 0) {
            throw DataError("predictions line " + std::to_string(rec.line) + ": label or count out of range");
        }
        out.push_back({rec.fields[0], nr, AgreementLabel(label), static_cast<std::size_t>(count)});
    }
    return out;
}

inline std::vector<PredictionRecord> load_predictions(const std::string& path) {
    return parse_predictions(
        csv::expect_header(csv::read_file(path), {"party", "statement_nr", "label", "in_topic_count"}, path));
}

}  // namespace t2s
