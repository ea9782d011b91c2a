#pragma once

// Command-line front end: clean, score, predict, grid, report.
//
// Every command exits 0 only after all of its outputs are written. Failures
// print one JSON object {"status":"error","type":...,"message":...} on stderr
// and exit 1 (2 for usage errors).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "t2s/t2s.hpp"

namespace t2s::cli {

class UsageError : public Error {
public:
    using Error::Error;
};

/// Provider used when only the cache may answer: every miss is an error.
class CacheOnlyProvider final : public ScoreProvider {
public:
    std::vector<double> score(const ModelId& model, std::span<const ScorePair> pairs) override {
        throw MissingScoreError("score cache has no " + model.key() + " score for (" + pairs.front().tweet_id +
                                ", " + pairs.front().hypothesis_id + ")");
    }
};

inline std::unique_ptr<ScoreProvider> make_provider(const ProviderSettings& settings) {
    switch (settings.kind) {
        case ProviderKind::cache: return std::make_unique<CacheOnlyProvider>();
        case ProviderKind::replay:
            if (settings.replay_file.empty()) {
                throw UsageError("the replay provider needs --replay-file");
            }
            return std::make_unique<FileReplayProvider>(settings.replay_file);
        case ProviderKind::remote:
            return std::make_unique<RemoteProvider>(
                settings.url.empty() ? provider_url_from_env() : settings.url);
        case ProviderKind::mock: return std::make_unique<MockProvider>();
    }
    throw UsageError("unsupported provider");
}

/// Writes to a sibling temp file and renames it into place.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + tmp);
        }
        out << content;
        out.flush();
        if (!out) {
            throw DataError("write failed: " + tmp);
        }
    }
    std::filesystem::rename(tmp, path);
}

inline void write_report_files(const std::filesystem::path& dir, const EvalReport& report) {
    write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_file(dir / "report.csv", report_to_csv(report));
    write_file(dir / "errors.csv", cell_matrix_csv(report, [](const ReportCell& c) { return c.abs_error; }));
    write_file(dir / "in_topic_counts.csv",
               cell_matrix_csv(report, [](const ReportCell& c) { return c.in_topic_count; }));
}

inline nlohmann::json error_json(const std::string& type, const std::string& message) {
    return {{"status", "error"}, {"type", type}, {"message", message}};
}

inline void print_diagnostics(const LoadDiagnostics& diag, std::ostream& err) {
    for (const auto& m : diag.messages) {
        err << "warning: " << m << "\n";
    }
}

/// Flag values shared by several subcommands. Empty/unset means "take it from the manifest".
struct Flags {
    std::string manifest;
    std::string tweets;
    std::string statements;
    std::string ground_truth;
    std::string cache_dir;
    std::string output_dir;
    std::string provider;
    std::string url;
    std::string replay_file;
    std::vector<std::string> parties;
    std::size_t jobs = 0;
    std::size_t batch_size = 0;
};

inline RunManifest resolve_manifest(const Flags& f) {
    RunManifest m = f.manifest.empty() ? RunManifest{} : RunManifest::load(f.manifest);
    const auto take = [](std::string& dst, const std::string& src) {
        if (!src.empty()) {
            dst = src;
        }
    };
    take(m.tweets, f.tweets);
    take(m.statements, f.statements);
    take(m.ground_truth, f.ground_truth);
    take(m.cache_dir, f.cache_dir);
    take(m.output_dir, f.output_dir);
    if (!f.provider.empty()) {
        m.provider.kind = parse_provider_kind(f.provider);
    }
    if (const char* env = std::getenv("T2S_PROVIDER_URL"); env && *env) {
        m.provider.url = env;
    }
    take(m.provider.url, f.url);
    take(m.provider.replay_file, f.replay_file);
    if (!f.parties.empty()) {
        m.parties = f.parties;
    }
    if (f.jobs) {
        m.jobs = f.jobs;
    }
    if (f.batch_size) {
        m.batch_size = f.batch_size;
    }
    if (m.jobs == 0) {
        m.jobs = default_jobs();
    }
    return m;
}

inline void add_input_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--manifest", f.manifest, "Experiment manifest (JSON); flags override its keys");
    cmd->add_option("--tweets", f.tweets, "Tweet dump (JSONL)");
    cmd->add_option("--statements", f.statements, "Statement catalog (CSV: nr,lang,sentence,topic)");
    cmd->add_option("--cache", f.cache_dir, "Score cache directory");
    cmd->add_option("--provider", f.provider, "Score provider: cache, replay, remote, mock")
        ->check(CLI::IsMember({"cache", "replay", "remote", "mock"}));
    cmd->add_option("--url", f.url, "Inference service base URL (default: $T2S_PROVIDER_URL or http://127.0.0.1:8008)");
    cmd->add_option("--replay-file", f.replay_file, "Score file served by the replay provider");
    cmd->add_option("--parties", f.parties, "Restrict to these authors")->delimiter(',');
    cmd->add_option("--jobs", f.jobs, "Worker threads (default: all processors)");
    cmd->add_option("--batch-size", f.batch_size, "Pairs per provider request (default 16)");
}

struct Loaded {
    std::vector<RawTweet> tweets;
    std::vector<Statement> statements;
    std::vector<GroundTruth> truth;
};

inline Loaded load_inputs(const RunManifest& m, bool need_truth, std::ostream& err) {
    Loaded l;
    LoadDiagnostics diag;
    l.tweets = load_dump(m.tweets, &diag);
    print_diagnostics(diag, err);
    l.statements = load_statements(m.statements);
    if (need_truth || !m.ground_truth.empty()) {
        l.truth = load_ground_truth(m.ground_truth);
    }
    return l;
}

/// Scores every tweet of `timelines` against both hypotheses of every statement.
inline ScoreMatrix score_timelines(const RunManifest& m, const ModelId& model, const std::vector<Timeline>& timelines,
                                   const std::vector<Statement>& statements, ScoreStats* stats = nullptr) {
    std::vector<CleanTweet> premises;
    std::set<std::string> seen;
    for (const auto& tl : timelines) {
        for (const auto& t : tl.tweets) {
            if (seen.insert(t.id).second) {
                premises.push_back(t);
            }
        }
    }
    const std::string& lang = m.languages.lang_for(model.mode());
    std::vector<Hypothesis> hyps;
    for (const auto& st : statements) {
        hyps.push_back(topic_hypothesis(st, lang, m.languages));
        hyps.push_back(sentence_hypothesis(st, lang));
    }
    auto provider = make_provider(m.provider);
    std::optional<ScoreCache> cache;
    if (!m.cache_dir.empty()) {
        cache.emplace(m.cache_dir);
    } else if (m.provider.kind == ProviderKind::cache) {
        throw UsageError("no score cache given (--cache) and the provider is cache-only");
    }
    ScoreOptions options{m.batch_size, m.jobs};
    return score_batch(*provider, model, premises, hyps, cache ? &*cache : nullptr, options, stats);
}

inline std::vector<std::string> universe_parties(const RunManifest& m, const Loaded& in) {
    if (!m.parties.empty()) {
        return m.parties;
    }
    if (!in.truth.empty()) {
        return parties_of(in.truth);
    }
    return authors_of(in.tweets);
}

inline int cmd_clean(const std::string& dump, const std::string& out_path, bool use_translated, std::ostream& out,
                     std::ostream& err) {
    LoadDiagnostics diag;
    const auto tweets = load_dump(dump, &diag);
    print_diagnostics(diag, err);
    std::string body;
    std::size_t dropped = 0, written = 0;
    for (const auto& t : tweets) {
        if (use_translated && !t.text_translated) {
            throw DataError("tweet '" + t.id + "' has no text_translated");
        }
        const auto cleaned_text = clean_text(t.text, t.kind);
        std::optional<std::string> translated;
        if (t.text_translated) {
            translated = clean_text(*t.text_translated, t.kind);
        }
        const auto& primary = use_translated ? translated : cleaned_text;
        if (!primary) {
            ++dropped;
            continue;
        }
        RawTweet cleaned = t;
        if (cleaned_text) {
            cleaned.text = *cleaned_text;
        }
        if (translated) {
            cleaned.text_translated = *translated;
        }
        auto j = to_json(cleaned);
        j["word_count"] = text::count_words(*primary);
        body += j.dump() + "\n";
        ++written;
    }
    write_file(out_path, body);
    out << nlohmann::json{{"read", diag.lines},
                          {"malformed", diag.skipped},
                          {"dropped", dropped},
                          {"written", written}}
               .dump()
        << "\n";
    return 0;
}

inline int cmd_score(const RunManifest& m, const std::string& model_name, const std::string& window_spec,
                     std::ostream& out, std::ostream& err) {
    if (m.tweets.empty() || m.statements.empty()) {
        throw UsageError("score needs --tweets and --statements (or a manifest)");
    }
    if (m.cache_dir.empty()) {
        throw UsageError("score needs --cache");
    }
    const auto in = load_inputs(m, false, err);
    const auto model = ModelId::parse(model_name);
    const auto window = DatasetWindow::parse(window_spec);
    std::vector<Timeline> timelines;
    for (const auto& party : universe_parties(m, in)) {
        timelines.push_back(build_timeline(in.tweets, party, window, model.uses_translation()));
    }
    ScoreStats stats;
    const auto matrix = score_timelines(m, model, timelines, in.statements, &stats);
    out << nlohmann::json{{"model", model.key()},
                          {"pairs", matrix.size()},
                          {"cache_hits", stats.cache_hits},
                          {"scored", stats.provider_pairs}}
               .dump()
        << "\n";
    return 0;
}

struct PredictFlags {
    std::string model = "BART";
    std::string window = "D4";
    std::string algorithm = "alg3";
    double threshold = 0.6;
    int min_support = kDefaultMinSupport;
    bool swap_weights = false;
    std::string out;
    std::string baseline;
    std::uint64_t seed = 42;
    int top_k = 10;
    std::string embeddings;
    std::string embed_model;
    std::string report_dir;
};

inline int cmd_predict(const RunManifest& m, const PredictFlags& f, std::ostream& out, std::ostream& err) {
    if (m.tweets.empty() || m.statements.empty()) {
        throw UsageError("predict needs --tweets and --statements (or a manifest)");
    }
    const auto in = load_inputs(m, false, err);
    PredictorConfig config{ModelId::parse(f.model), DatasetWindow::parse(f.window), parse_algorithm(f.algorithm),
                           f.threshold, f.min_support, f.swap_weights};
    config.validate();
    const auto parties = universe_parties(m, in);
    std::vector<Timeline> timelines;
    for (const auto& party : parties) {
        timelines.push_back(build_timeline(in.tweets, party, config.window, config.model.uses_translation()));
    }
    const std::string& lang = m.languages.lang_for(config.model.mode());

    std::vector<PredictionRecord> predictions;
    std::string method;
    if (!f.baseline.empty()) {
        const auto kind = parse_baseline(f.baseline);
        method = "baseline:" + std::string(to_string(kind));
        RandomBaseline rng(f.seed);
        std::unique_ptr<EmbeddingProvider> embedder;
        if (kind == BaselineKind::sentence_embed) {
            if (!f.embeddings.empty()) {
                auto replay = std::make_unique<EmbeddingReplay>(f.embeddings);
                print_diagnostics(replay->diagnostics(), err);
                embedder = std::move(replay);
            } else if (!f.embed_model.empty()) {
                embedder = std::make_unique<RemoteEmbedder>(m.provider.url.empty() ? provider_url_from_env()
                                                                                    : m.provider.url,
                                                            f.embed_model);
            } else {
                throw UsageError("the sentence_embed baseline needs --embeddings or --embed-model");
            }
        }
        for (const auto& tl : timelines) {
            for (const auto& st : in.statements) {
                AgreementLabel label;
                std::size_t considered = 0;
                switch (kind) {
                    case BaselineKind::random: label = baseline_random(rng); break;
                    case BaselineKind::predict3: label = baseline_predict3(); break;
                    case BaselineKind::sentence_embed:
                        label = predict_sentence_embed(*embedder, tl, st, lang, f.top_k);
                        considered = tl.tweets.size();
                        break;
                }
                predictions.push_back({tl.author, st.nr, label, considered});
            }
        }
    } else {
        method = describe(config);
        const auto matrix = score_timelines(m, config.model, timelines, in.statements);
        for (const auto& tl : timelines) {
            for (const auto& st : in.statements) {
                predictions.push_back(predict(tl, st, matrix, config, m.languages));
            }
        }
    }

    std::filesystem::path out_path = f.out;
    if (out_path.empty()) {
        out_path = std::filesystem::path(m.output_dir.empty() ? "." : m.output_dir) / "predictions.csv";
    }
    write_file(out_path, predictions_to_csv(predictions));
    nlohmann::json summary{{"method", method}, {"predictions", predictions.size()}, {"out", out_path.string()}};
    if (!in.truth.empty()) {
        const auto report = build_report(predictions, in.truth, method,
                                         f.baseline.empty() ? std::optional(config) : std::nullopt);
        summary["mae"] = report.overall.mae;
        summary["f1_weighted"] = report.overall.f1_weighted;
        if (!f.report_dir.empty()) {
            write_report_files(f.report_dir, report);
        }
    } else if (!f.report_dir.empty()) {
        throw UsageError("--report-dir needs --ground-truth");
    }
    out << summary.dump() << "\n";
    return 0;
}

inline int cmd_grid(const RunManifest& m, std::ostream& out, std::ostream& err) {
    m.validate(true);
    if (m.output_dir.empty()) {
        throw UsageError("grid needs an output directory (--out or output_dir)");
    }
    auto in = load_inputs(m, true, err);
    const auto parties = parties_of(in.truth);
    std::set<int> nrs;
    for (const auto& g : in.truth) {
        nrs.insert(g.statement_nr);
    }
    std::vector<Statement> used;
    for (int nr : nrs) {
        used.push_back(find_statement(in.statements, nr));
    }
    std::map<std::string, ScoreMatrix> matrices;
    for (const auto& model : m.grid.models) {
        std::vector<Timeline> timelines;
        for (const auto& w : m.grid.windows) {
            for (const auto& party : parties) {
                timelines.push_back(build_timeline(in.tweets, party, w, model.uses_translation()));
            }
        }
        matrices.emplace(model.key(), score_timelines(m, model, timelines, used));
    }
    Experiment experiment(std::move(in.tweets), std::move(in.statements), in.truth, std::move(matrices),
                          m.languages);
    const auto points = experiment.run_grid(m.grid, m.jobs);
    const std::filesystem::path dir = m.output_dir;
    const auto& best = points.front();
    const auto predictions = experiment.predict_all(best.config);
    const auto report = build_report(predictions, in.truth, describe(best.config), best.config);
    write_file(dir / "grid.csv", grid_to_csv(points));
    write_file(dir / "predictions.csv", predictions_to_csv(predictions));
    write_report_files(dir, report);
    out << nlohmann::json{{"grid_points", points.size()},
                          {"best", config_to_json(best.config)},
                          {"mae", best.mae},
                          {"f1_weighted", best.f1_weighted}}
               .dump()
        << "\n";
    return 0;
}

inline int cmd_report(const std::string& predictions_path, const std::string& truth_path, const std::string& dir,
                      const std::string& method, std::ostream& out) {
    const auto predictions = load_predictions(predictions_path);
    const auto truth = load_ground_truth(truth_path);
    const auto report = build_report(predictions, truth, method);
    write_report_files(dir, report);
    out << nlohmann::json{{"method", method}, {"overall", metrics_to_json(report.overall)}}.dump() << "\n";
    return 0;
}

/// Entry point shared by the t2s binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Tweets-to-stance: zero-shot agreement prediction from social media timelines", "t2s"};
    app.require_subcommand(1);

    Flags flags;
    PredictFlags pf;
    std::string clean_in, clean_out;
    bool clean_translated = false;
    std::string score_model = "BART", score_window = "all";
    std::string report_predictions, report_method = "predictions";

    auto* clean = app.add_subcommand("clean", "Clean a tweet dump and drop tweets with fewer than four words");
    clean->add_option("--dump", clean_in, "Input tweet dump (JSONL)")->required();
    clean->add_option("--out", clean_out, "Output JSONL")->required();
    clean->add_flag("--use-translated", clean_translated, "Decide drops on text_translated");

    auto* score = app.add_subcommand("score", "Fill the score cache for tweets x statement hypotheses");
    add_input_flags(score, flags);
    score->add_option("--model", score_model, "BART, XRoberta_1, XRoberta_2 or <name>@pivot|@source");
    score->add_option("--window", score_window, "D3, D4, D5, D7, all, or YYYY-MM-DD:YYYY-MM-DD (default all)");

    auto* predict_cmd = app.add_subcommand("predict", "Predict agreement labels for every (party, statement)");
    add_input_flags(predict_cmd, flags);
    predict_cmd->add_option("--ground-truth", flags.ground_truth, "Ground truth CSV; enables metrics");
    predict_cmd->add_option("--model", pf.model, "Classifier model (default BART)");
    predict_cmd->add_option("--window", pf.window, "Dataset window (default D4)");
    predict_cmd->add_option("--alg", pf.algorithm, "alg1, alg2, alg3 or alg4 (default alg3)")
        ->check(CLI::IsMember({"alg1", "alg2", "alg3", "alg4", "Alg1", "Alg2", "Alg3", "Alg4"}));
    predict_cmd->add_option("--th", pf.threshold, "Topic filtering threshold in [0,1] (default 0.6)")
        ->check(CLI::Range(0.0, 1.0));
    predict_cmd->add_option("--m", pf.min_support, "Minimum in-topic tweets for alg4 (default 3)")
        ->check(CLI::PositiveNumber);
    predict_cmd->add_flag("--alg1-swap-weights", pf.swap_weights, "Alg1: weight sentence scores by topic scores");
    predict_cmd->add_option("--out", pf.out, "Predictions CSV (default <output_dir>/predictions.csv)");
    predict_cmd->add_option("--baseline", pf.baseline, "Run a baseline instead: random, predict3, sentence_embed")
        ->check(CLI::IsMember({"random", "predict3", "sentence_embed"}));
    predict_cmd->add_option("--seed", pf.seed, "Random baseline seed (default 42)");
    predict_cmd->add_option("--top-k", pf.top_k, "Sentence-embedding baseline K (default 10)")
        ->check(CLI::PositiveNumber);
    predict_cmd->add_option("--embeddings", pf.embeddings, "Embedding replay file (JSONL)");
    predict_cmd->add_option("--embed-model", pf.embed_model, "Embedding model name served by /embed");
    predict_cmd->add_option("--report-dir", pf.report_dir, "Also write report files here (needs --ground-truth)");

    auto* grid = app.add_subcommand("grid", "Evaluate the configuration grid and report the best setup");
    add_input_flags(grid, flags);
    grid->add_option("--ground-truth", flags.ground_truth, "Ground truth CSV");
    grid->add_option("--out", flags.output_dir, "Output directory");

    auto* report = app.add_subcommand("report", "Build report files from a predictions CSV");
    report->add_option("--predictions", report_predictions, "Predictions CSV")->required();
    report->add_option("--ground-truth", flags.ground_truth, "Ground truth CSV")->required();
    report->add_option("--out", flags.output_dir, "Output directory")->required();
    report->add_option("--method", report_method, "Label stored in the report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what()).dump() << "\n";
        return 2;
    }

    try {
        if (clean->parsed()) {
            return cmd_clean(clean_in, clean_out, clean_translated, out, err);
        }
        if (report->parsed()) {
            return cmd_report(report_predictions, flags.ground_truth, flags.output_dir, report_method, out);
        }
        const RunManifest manifest = resolve_manifest(flags);
        if (score->parsed()) {
            return cmd_score(manifest, score_model, score_window, out, err);
        }
        if (predict_cmd->parsed()) {
            return cmd_predict(manifest, pf, out, err);
        }
        return cmd_grid(manifest, out, err);
    } catch (const UsageError& e) {
        err << error_json("usage", e.what()).dump() << "\n";
        return 2;
    } catch (const MissingScoreError& e) {
        err << error_json("missing_scores", e.what()).dump() << "\n";
    } catch (const ProtocolError& e) {
        err << error_json("protocol", e.what()).dump() << "\n";
    } catch (const ProviderError& e) {
        err << error_json("provider", e.what()).dump() << "\n";
    } catch (const DataError& e) {
        err << error_json("data", e.what()).dump() << "\n";
    } catch (const std::exception& e) {
        err << error_json("internal", e.what()).dump() << "\n";
    }
    return 1;
}

}  // namespace t2s::cli
