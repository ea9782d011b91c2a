#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace t2s;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "t2s");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "t2s_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        n += !line.empty();
    }
    return n;
}

void write_jsonl(const fs::path& p, const std::vector<RawTweet>& tweets) {
    std::ofstream out(p);
    for (const auto& t : tweets) {
        out << to_json(t).dump() << "\n";
    }
}

/// The synthetic universe written to disk: tweets, statements, ground truth.
fs::path synthetic_inputs(const std::string& name) {
    const auto dir = fresh_dir(name);
    write_jsonl(dir / "tweets.jsonl", synthetic::tweets());
    cli::write_file(dir / "statements.csv", serialize_statements(synthetic::statements()));
    std::string gt = "party,statement_nr,label\n";
    for (const auto& g : synthetic::ground_truth()) {
        gt += g.party + "," + std::to_string(g.statement_nr) + "," + std::to_string(g.label.value()) + "\n";
    }
    cli::write_file(dir / "ground_truth.csv", gt);
    return dir;
}

/// Replay file with the planted scores for every built-in model.
void write_planted_replay(const fs::path& path) {
    std::ofstream out(path);
    const auto matrices = synthetic::score_matrices(synthetic::tweets(), synthetic::statements());
    for (const auto& [model, matrix] : matrices) {
        for (const auto& [key, score] : matrix.sorted_entries()) {
            const auto sep = key.find('\x1f');
            out << format_score_record({key.substr(0, sep), key.substr(sep + 1), model, score}) << "\n";
        }
    }
}

}  // namespace

TEST(CliClean, EmptyDump) {
    const auto dir = fresh_dir("clean_empty");
    std::ofstream(dir / "dump.jsonl").close();
    const auto r = run_cli({"clean", "--dump", (dir / "dump.jsonl").string(), "--out", (dir / "out.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(dir / "out.jsonl"), 0u);
    const auto stats = json::parse(r.out);
    EXPECT_EQ(stats.at("written"), 0);
    EXPECT_EQ(stats.at("dropped"), 0);
}

TEST(CliClean, DropsShortTweetsAndIsIdempotent) {
    const auto dir = fresh_dir("clean_ten");
    std::vector<RawTweet> tweets;
    const char* texts[] = {
        "the first tweet has enough words",        "RT @foo: Vote! https://t.co/x #eu ++",
        "second one also has words here",          "#only #hashtags #here #now #please",
        "third tweet with @someone mentioned ok",  "too short",
        "fourth tweet &gt with entity inside",     "\xF0\x9F\x98\x80 \xF0\x9F\x98\x80 wow",
        "fifth tweet\nspans two lines here",       "sixth and final tweet keeps going",
    };
    for (int i = 0; i < 10; ++i) {
        tweets.push_back(RawTweet{"id" + std::to_string(i), "a", *parse_timestamp("2019-03-01T00:00:00Z"), texts[i],
                                  std::nullopt, TweetKind::original});
    }
    write_jsonl(dir / "dump.jsonl", tweets);
    auto r = run_cli({"clean", "--dump", (dir / "dump.jsonl").string(), "--out", (dir / "once.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(dir / "once.jsonl"), 6u);
    EXPECT_EQ(json::parse(r.out).at("dropped"), 4);
    r = run_cli({"clean", "--dump", (dir / "once.jsonl").string(), "--out", (dir / "twice.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "once.jsonl"), slurp(dir / "twice.jsonl"));
}

TEST(CliScore, FillsCacheThenHitsIt) {
    const auto dir = fresh_dir("score");
    std::vector<RawTweet> tweets;
    for (int i = 0; i < 3; ++i) {
        tweets.push_back(RawTweet{"t" + std::to_string(i), "lega", *parse_timestamp("2019-03-01T00:00:00Z"),
                                  "testo del tweet numero " + std::to_string(i),
                                  "text of tweet number " + std::to_string(i), TweetKind::original});
    }
    write_jsonl(dir / "tweets.jsonl", tweets);
    cli::write_file(dir / "statements.csv",
                    "nr,lang,sentence,topic\n1,en,Italy should exit the euro,exit the euro\n"
                    "1,it,l'Italia dovrebbe uscire dall'Euro,uscire dall'euro\n"
                    "2,en,a common European army should exist,common European army\n"
                    "2,it,dovrebbe esistere un esercito comune europeo,esercito europeo comune\n");
    const std::vector<std::string> args{"score",       "--tweets", (dir / "tweets.jsonl").string(), "--statements",
                                        (dir / "statements.csv").string(), "--cache", (dir / "cache").string(),
                                        "--provider",  "mock"};
    auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(count_lines(dir / "cache" / "scores.jsonl"), 12u);
    EXPECT_EQ(json::parse(r.out).at("scored"), 12);
    r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out).at("scored"), 0);
    EXPECT_EQ(json::parse(r.out).at("cache_hits"), 12);
    EXPECT_EQ(count_lines(dir / "cache" / "scores.jsonl"), 12u);

    // the cache alone now answers
    auto cache_only = args;
    cache_only.back() = "cache";
    EXPECT_EQ(run_cli(cache_only).code, 0);
}

TEST(CliScore, MissingTranslationNamesTweet) {
    const auto dir = fresh_dir("score_missing");
    write_jsonl(dir / "tweets.jsonl", {RawTweet{"no-translation-7", "lega", *parse_timestamp("2019-03-01T00:00:00Z"),
                                                "testo senza traduzione qui", std::nullopt, TweetKind::original}});
    cli::write_file(dir / "statements.csv", "nr,lang,sentence,topic\n1,en,s,t\n1,it,s,t\n");
    const auto r = run_cli({"score", "--tweets", (dir / "tweets.jsonl").string(), "--statements",
                            (dir / "statements.csv").string(), "--cache", (dir / "cache").string(), "--provider",
                            "mock", "--model", "BART"});
    EXPECT_EQ(r.code, 1);
    const auto e = json::parse(r.err);
    EXPECT_EQ(e.at("status"), "error");
    EXPECT_NE(e.at("message").get<std::string>().find("no-translation-7"), std::string::npos);
}

TEST(CliScore, CacheOnlyMissIsError) {
    const auto dir = synthetic_inputs("score_cache_only");
    const auto r = run_cli({"score", "--tweets", (dir / "tweets.jsonl").string(), "--statements",
                            (dir / "statements.csv").string(), "--cache", (dir / "cache").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err).at("type"), "missing_scores");
}

TEST(CliPredict, ThresholdOutOfRangeIsUsageError) {
    const auto r = run_cli({"predict", "--th", "1.5"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(json::parse(r.err).at("type"), "usage");
    EXPECT_EQ(run_cli({"predict", "--alg", "alg9"}).code, 2);
    EXPECT_EQ(run_cli({"bogus"}).code, 2);
}

TEST(CliPredict, OptimalSetupOnSyntheticUniverse) {
    const auto dir = synthetic_inputs("predict");
    write_planted_replay(dir / "replay.jsonl");
    const auto r = run_cli({"predict", "--tweets", (dir / "tweets.jsonl").string(), "--statements",
                            (dir / "statements.csv").string(), "--ground-truth", (dir / "ground_truth.csv").string(),
                            "--provider", "replay", "--replay-file", (dir / "replay.jsonl").string(), "--model",
                            "BART", "--window", "D4", "--alg", "alg3", "--th", "0.6", "--out",
                            (dir / "pred.csv").string(), "--report-dir", (dir / "report").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_predictions((dir / "pred.csv").string()).size(), 120u);
    const auto summary = json::parse(r.out);
    EXPECT_DOUBLE_EQ(summary.at("mae").get<double>(), 0.0);
    EXPECT_DOUBLE_EQ(summary.at("f1_weighted").get<double>(), 1.0);
    for (const char* f : {"report.json", "report.csv", "errors.csv", "in_topic_counts.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "report" / f)) << f;
    }
    const auto counts = csv::parse(slurp(dir / "report" / "in_topic_counts.csv"));
    EXPECT_EQ(counts[1].fields[1], "3");
}

TEST(CliPredict, Baselines) {
    const auto dir = synthetic_inputs("baselines");
    const std::vector<std::string> base{"predict",      "--tweets",       (dir / "tweets.jsonl").string(),
                                        "--statements", (dir / "statements.csv").string(),
                                        "--ground-truth", (dir / "ground_truth.csv").string()};
    auto args = base;
    args.insert(args.end(), {"--baseline", "predict3", "--out", (dir / "p3.csv").string()});
    auto r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& p : load_predictions((dir / "p3.csv").string())) {
        ASSERT_EQ(p.label.value(), 3);
    }
    args = base;
    args.insert(args.end(), {"--baseline", "random", "--out", (dir / "r1.csv").string()});
    ASSERT_EQ(run_cli(args).code, 0);
    args.back() = (dir / "r2.csv").string();
    ASSERT_EQ(run_cli(args).code, 0);
    EXPECT_EQ(slurp(dir / "r1.csv"), slurp(dir / "r2.csv"));
    EXPECT_EQ(count_lines(dir / "r1.csv"), 121u);

    args = base;
    args.insert(args.end(), {"--baseline", "sentence_embed", "--out", (dir / "se.csv").string()});
    EXPECT_EQ(run_cli(args).code, 2);
    {
        std::ofstream emb(dir / "emb.jsonl");
        for (const auto& t : synthetic::tweets()) {
            emb << json{{"id", t.id}, {"dim", 2}, {"values", {1.0, static_cast<double>(t.id.size() % 7)}}}.dump()
                << "\n";
        }
        for (int s = 1; s <= synthetic::kStatements; ++s) {
            emb << json{{"id", sentence_embedding_id(s, "en")}, {"dim", 2}, {"values", {1.0, s % 3 * 1.0}}}.dump()
                << "\n";
        }
    }
    args.insert(args.end(), {"--embeddings", (dir / "emb.jsonl").string()});
    r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_predictions((dir / "se.csv").string()).size(), 120u);
}

TEST(CliGrid, FullGridFromManifest) {
    const auto dir = synthetic_inputs("grid");
    write_planted_replay(dir / "replay.jsonl");
    cli::write_file(dir / "manifest.json", json{{"tweets", "tweets.jsonl"},
                                                {"statements", "statements.csv"},
                                                {"ground_truth", "ground_truth.csv"},
                                                {"cache_dir", "cache"},
                                                {"output_dir", "out"},
                                                {"provider", {{"kind", "replay"}, {"replay_file", "replay.jsonl"}}},
                                                {"jobs", 4}}
                                               .dump(2));
    auto r = run_cli({"grid", "--manifest", (dir / "manifest.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = json::parse(r.out);
    EXPECT_EQ(summary.at("grid_points"), 240);
    EXPECT_DOUBLE_EQ(summary.at("mae").get<double>(), 0.0);
    EXPECT_EQ(count_lines(dir / "out" / "grid.csv"), 241u);
    EXPECT_EQ(count_lines(dir / "out" / "predictions.csv"), 121u);
    const auto first_grid = slurp(dir / "out" / "grid.csv");

    // second run: flags override the manifest, cache answers everything
    r = run_cli({"grid", "--manifest", (dir / "manifest.json").string(), "--provider", "cache", "--out",
                 (dir / "out2").string(), "--jobs", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(dir / "out2" / "grid.csv"), first_grid);
}

TEST(CliGrid, MissingInputsAreDataErrors) {
    const auto dir = fresh_dir("grid_missing");
    const auto r = run_cli({"grid", "--tweets", (dir / "nope.jsonl").string(), "--statements",
                            (dir / "nope.csv").string(), "--ground-truth", (dir / "nope_gt.csv").string(), "--out",
                            (dir / "out").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(json::parse(r.err).at("type"), "data");
    EXPECT_FALSE(fs::exists(dir / "out" / "grid.csv"));
}

TEST(CliReport, FromPredictionsFile) {
    const auto dir = synthetic_inputs("report");
    std::vector<PredictionRecord> preds;
    for (const auto& g : synthetic::ground_truth()) {
        preds.push_back({g.party, g.statement_nr, g.label, 1});
    }
    preds[0].label = AgreementLabel(preds[0].label.value() <= 3 ? preds[0].label.value() + 2 : 1);
    cli::write_file(dir / "pred.csv", predictions_to_csv(preds));
    const auto r = run_cli({"report", "--predictions", (dir / "pred.csv").string(), "--ground-truth",
                            (dir / "ground_truth.csv").string(), "--out", (dir / "rep").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = json::parse(slurp(dir / "rep" / "report.json"));
    EXPECT_EQ(report.at("cells").size(), 120u);
    EXPECT_GT(report.at("overall").at("mae").get<double>(), 0.0);

    preds.pop_back();
    cli::write_file(dir / "short.csv", predictions_to_csv(preds));
    const auto bad = run_cli({"report", "--predictions", (dir / "short.csv").string(), "--ground-truth",
                              (dir / "ground_truth.csv").string(), "--out", (dir / "rep2").string()});
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.err.find("party5, 20"), std::string::npos) << bad.err;
}

TEST(CliManifest, EnvironmentUrlAndFlagPrecedence) {
    ::setenv("T2S_PROVIDER_URL", "http://env.invalid:1", 1);
    cli::Flags f;
    f.provider = "remote";
    EXPECT_EQ(cli::resolve_manifest(f).provider.url, "http://env.invalid:1");
    f.url = "http://flag.invalid:2";
    EXPECT_EQ(cli::resolve_manifest(f).provider.url, "http://flag.invalid:2");
    ::unsetenv("T2S_PROVIDER_URL");
}

TEST(CliManifest, FixtureManifestLoads) {
    const auto m = RunManifest::load(T2S_FIXTURES "/manifest.json");
    EXPECT_EQ(m.provider.kind, ProviderKind::mock);
    EXPECT_EQ(m.grid.configs().size(), 240u);
    EXPECT_NO_THROW(m.validate(true));
}
