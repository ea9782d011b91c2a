#include <gtest/gtest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <random>

#include "fake_server.hpp"
#include "t2s/baselines.hpp"
#include "t2s/remote.hpp"

namespace fs = std::filesystem;
using namespace t2s;
using nlohmann::json;

TEST(RandomBaselineTest, UniformOverAMillionDraws) {
    RandomBaseline rng(42);
    std::array<long, 6> counts{};
    constexpr long kDraws = 1'000'000;
    for (long i = 0; i < kDraws; ++i) {
        const int l = baseline_random(rng).value();
        ASSERT_GE(l, 1);
        ASSERT_LE(l, 5);
        ++counts[l];
    }
    for (int l = 1; l <= 5; ++l) {
        EXPECT_NEAR(static_cast<double>(counts[l]) / kDraws, 0.2, 0.01) << "label " << l;
    }
}

TEST(RandomBaselineTest, SameSeedSameStream) {
    RandomBaseline a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const int x = a.next().value();
        ASSERT_EQ(x, b.next().value());
        differs |= x != c.next().value();
    }
    EXPECT_TRUE(differs);
}

TEST(Predict3, AlwaysNeutral) {
    EXPECT_EQ(baseline_predict3().value(), 3);
    EXPECT_EQ(parse_baseline("predict3"), BaselineKind::predict3);
    EXPECT_THROW(parse_baseline("oracle"), DataError);
}

TEST(Similarities, Examples) {
    EXPECT_EQ(label_from_similarities(std::vector<double>{0.3, 0.3, 0.3}, 10).value(), 1);
    EXPECT_EQ(label_from_similarities(std::vector<double>{-1, 0, 1}, 1).value(), 5);
    EXPECT_EQ(label_from_similarities(std::vector<double>{-1, 1}, 2).value(), 3);
    EXPECT_EQ(label_from_similarities(std::vector<double>{}, 10).value(), 3);
    EXPECT_THROW(label_from_similarities(std::vector<double>{0.1}, 0), DataError);
}

TEST(Similarities, TopKCoversAllWhenLarge) {
    // scaled [0, 0.25, 0.5, 1]: all four -> 0.4375 -> 3; top 2 -> 0.75 -> 4
    const std::vector<double> sims{0.0, 0.25, 0.5, 1.0};
    EXPECT_EQ(label_from_similarities(sims, 10).value(), 3);
    EXPECT_EQ(label_from_similarities(sims, 4).value(), 3);
    EXPECT_EQ(label_from_similarities(sims, 2).value(), 4);
}

TEST(Similarities, InvariantUnderPositiveAffineMaps) {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10000; ++rep) {
        const std::size_t n = 1 + rng() % 15;
        std::vector<double> sims(n), mapped(n);
        for (std::size_t i = 0; i < n; ++i) {
            sims[i] = static_cast<double>(static_cast<int>(rng() % 129) - 64) / 64.0;
            mapped[i] = sims[i] / 4.0 + 0.25;  // exact in binary
        }
        const int k = 1 + static_cast<int>(rng() % 12);
        ASSERT_EQ(label_from_similarities(sims, k).value(), label_from_similarities(mapped, k).value());
    }
}

TEST(Cosine, BasicsAndErrors) {
    const EmbeddingVector a{{1, 0}}, b{{0, 1}}, c{{2, 0}}, z{{0, 0}}, d3{{1, 2, 3}};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
    EXPECT_THROW(cosine_similarity(a, z), DataError);
    EXPECT_THROW(cosine_similarity(a, d3), DataError);
    // closest tweet dominates with K=1
    const std::vector<EmbeddingVector> tl{{{1, 0}}, {{-1, 0}}, {{0, 1}}};
    EXPECT_EQ(baseline_sentence_embed(tl, a, 1).value(), 5);
}

TEST(EmbeddingReplayTest, ServesVectorsAndFlagsBadLines) {
    const auto dir = fs::temp_directory_path() / "t2s_baselines_test";
    fs::create_directories(dir);
    const auto path = dir / "embeddings.jsonl";
    {
        std::ofstream out(path);
        out << R"({"id":"t1","dim":2,"values":[1,0]})" << "\n"
            << R"({"id":"t2","dim":2,"values":[0,1]})" << "\n"
            << R"({"id":"t3","dim":3,"values":[0,1]})" << "\n"
            << R"({"id":"s1.sentence.en","dim":2,"values":[1,0.1]})" << "\n";
    }
    EmbeddingReplay replay(path);
    EXPECT_EQ(replay.dim(), 2u);
    EXPECT_EQ(replay.diagnostics().skipped, 1u);

    Timeline tl;
    tl.author = "p";
    tl.tweets = {CleanTweet{"t1", "p", {}, "one two three four", 4}, CleanTweet{"t2", "p", {}, "five six seven eight", 4}};
    Statement st;
    st.nr = 1;
    st.texts["en"] = {"sentence", "topic"};
    EXPECT_EQ(predict_sentence_embed(replay, tl, st, "en", 1).value(), 5);
    EXPECT_EQ(predict_sentence_embed(replay, tl, st, "en", 10).value(), 3);
    EXPECT_EQ(predict_sentence_embed(replay, Timeline{"p", {}}, st, "en", 10).value(), 3);
    tl.tweets.push_back(CleanTweet{"t9", "p", {}, "missing vector for this", 4});
    EXPECT_THROW(predict_sentence_embed(replay, tl, st, "en", 10), MissingScoreError);
}

TEST(RemoteEmbedderTest, EmbedsInBatches) {
    fake::FakeServer fake;
    std::atomic<int> calls{0};
    fake.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        const auto body = json::parse(req.body);
        EXPECT_EQ(body.at("model"), "mpnet");
        json vectors = json::array();
        for (const auto& t : body.at("texts")) {
            const double len = static_cast<double>(t.get<std::string>().size());
            vectors.push_back({len, 1.0});
        }
        res.set_content(json{{"dim", 2}, {"vectors", vectors}}.dump(), "application/json");
    });
    fake.start();
    RemoteEmbedder embedder(fake.url(), "mpnet", {3, std::chrono::milliseconds{1}}, std::chrono::seconds{10}, 2);
    const std::vector<EmbeddingProvider::Item> items{{"a", "x"}, {"b", "yy"}, {"c", "zzz"}};
    const auto out = embedder.embed(items);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[2].values, (std::vector<double>{3.0, 1.0}));
    EXPECT_EQ(calls.load(), 2);
}

TEST(RemoteEmbedderTest, MisalignedReplyIsProtocolError) {
    fake::FakeServer fake;
    fake.server.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"dim":2,"vectors":[[1,0]]})", "application/json");
    });
    fake.start();
    RemoteEmbedder embedder(fake.url(), "mpnet", {1, std::chrono::milliseconds{1}});
    const std::vector<EmbeddingProvider::Item> items{{"a", "x"}, {"b", "yy"}};
    EXPECT_THROW(embedder.embed(items), ProtocolError);
}
