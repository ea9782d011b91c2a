#pragma once

// Comparison baselines: uniform random labels, constant neutral, and a
// sentence-embedding similarity predictor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "t2s/common.hpp"
#include "t2s/corpus.hpp"
#include "t2s/stance.hpp"

namespace t2s {

enum class BaselineKind { random, predict3, sentence_embed };

inline BaselineKind parse_baseline(std::string_view s) {
    if (s == "random") return BaselineKind::random;
    if (s == "predict3") return BaselineKind::predict3;
    if (s == "sentence_embed") return BaselineKind::sentence_embed;
    throw DataError("unknown baseline '" + std::string(s) + "'");
}

inline std::string_view to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::random: return "random";
        case BaselineKind::predict3: return "predict3";
        case BaselineKind::sentence_embed: return "sentence_embed";
    }
    return "random";
}

struct BaselineConfig {
    BaselineKind kind = BaselineKind::predict3;
    std::uint64_t seed = 42;
    int top_k = 10;
};

/// Uniform labels in 1..5 from a seeded mt19937_64. The 64-bit draw is mapped
/// by rejection sampling so the stream is identical on every standard library.
class RandomBaseline {
public:
    explicit RandomBaseline(std::uint64_t seed = 42) : engine_(seed) {}

    AgreementLabel next() {
        constexpr std::uint64_t kRange = 5;
        constexpr std::uint64_t kLimit = std::numeric_limits<std::uint64_t>::max() -
                                         std::numeric_limits<std::uint64_t>::max() % kRange;
        std::uint64_t x = engine_();
        while (x >= kLimit) {
            x = engine_();
        }
        return AgreementLabel(static_cast<int>(1 + x % kRange));
    }

private:
    std::mt19937_64 engine_;
};

inline AgreementLabel baseline_random(RandomBaseline& rng) { return rng.next(); }

inline AgreementLabel baseline_predict3() { return AgreementLabel::neutral(); }

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DataError("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DataError("cosine similarity of a zero-norm embedding");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Min-max scales the similarities to [0,1] (a constant set maps to 0), then
/// applies M1 to the mean of the `top_k` largest scaled values. Fewer than
/// `top_k` values: all are averaged. No values: 3.
inline AgreementLabel label_from_similarities(std::span<const double> similarities, int top_k) {
    if (top_k < 1) {
        throw DataError("top_k must be >= 1");
    }
    if (similarities.empty()) {
        return AgreementLabel::neutral();
    }
    const auto [lo_it, hi_it] = std::minmax_element(similarities.begin(), similarities.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    std::vector<double> scaled;
    scaled.reserve(similarities.size());
    for (double s : similarities) {
        scaled.push_back(range > 0.0 ? (s - lo) / range : 0.0);
    }
    const std::size_t k = std::min(scaled.size(), static_cast<std::size_t>(top_k));
    std::partial_sort(scaled.begin(), scaled.begin() + static_cast<std::ptrdiff_t>(k), scaled.end(),
                      std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += scaled[i];
    }
    return AgreementLabel(map_m1(std::clamp(sum / static_cast<double>(k), 0.0, 1.0)));
}

inline AgreementLabel baseline_sentence_embed(std::span<const EmbeddingVector> timeline_embeds,
                                              const EmbeddingVector& sentence_embed, int top_k) {
    std::vector<double> sims;
    sims.reserve(timeline_embeds.size());
    for (const auto& e : timeline_embeds) {
        sims.push_back(cosine_similarity(e, sentence_embed));
    }
    return label_from_similarities(sims, top_k);
}

/// Source of text embeddings keyed by an id (tweet id or sentence id).
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    struct Item {
        std::string id;
        std::string text;
    };
    virtual std::vector<EmbeddingVector> embed(std::span<const Item> items) = 0;
};

/// Id used for a statement sentence in embedding files.
inline std::string sentence_embedding_id(int statement_nr, const std::string& lang) {
    return hypothesis_id(statement_nr, HypothesisKind::sentence, lang);
}

/// Replays embeddings from JSONL lines {"id": ..., "dim": n, "values": [...]}.
class EmbeddingReplay final : public EmbeddingProvider {
public:
    explicit EmbeddingReplay(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) {
            throw DataError("cannot read embedding file: " + path.string());
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            ++diag_.lines;
            try {
                const auto j = nlohmann::json::parse(line);
                EmbeddingVector v{j.at("values").get<std::vector<double>>()};
                const auto dim = j.at("dim").get<std::size_t>();
                if (dim == 0 || v.dim() != dim) {
                    throw DataError("dim does not match values");
                }
                if (!std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); })) {
                    throw DataError("non-finite embedding entry");
                }
                if (dim_ != 0 && dim != dim_) {
                    throw DataError("inconsistent dim " + std::to_string(dim) + " (expected " + std::to_string(dim_) + ")");
                }
                dim_ = dim;
                vectors_[j.at("id").get<std::string>()] = std::move(v);
                ++diag_.loaded;
            } catch (const std::exception& e) {
                ++diag_.skipped;
                diag_.messages.push_back(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    std::vector<EmbeddingVector> embed(std::span<const Item> items) override {
        std::vector<EmbeddingVector> out;
        out.reserve(items.size());
        for (const auto& item : items) {
            const auto it = vectors_.find(item.id);
            if (it == vectors_.end()) {
                throw MissingScoreError("embedding file has no vector for id '" + item.id + "'");
            }
            out.push_back(it->second);
        }
        return out;
    }

    std::size_t dim() const { return dim_; }
    const LoadDiagnostics& diagnostics() const { return diag_; }

private:
    std::map<std::string, EmbeddingVector> vectors_;
    std::size_t dim_ = 0;
    LoadDiagnostics diag_;
};

/// Sentence-embedding baseline over a whole timeline (no topic filtering).
inline AgreementLabel predict_sentence_embed(EmbeddingProvider& provider, const Timeline& timeline,
                                             const Statement& statement, const std::string& lang, int top_k) {
    if (timeline.tweets.empty()) {
        return AgreementLabel::neutral();
    }
    std::vector<EmbeddingProvider::Item> items;
    items.reserve(timeline.tweets.size());
    for (const auto& t : timeline.tweets) {
        items.push_back({t.id, t.text});
    }
    const EmbeddingProvider::Item sentence{sentence_embedding_id(statement.nr, lang), statement.in(lang).sentence};
    const auto tweet_vectors = provider.embed(items);
    const auto sentence_vector = provider.embed(std::span(&sentence, 1));
    if (tweet_vectors.size() != items.size() || sentence_vector.size() != 1) {
        throw ProtocolError("embedding provider returned a misaligned batch");
    }
    return baseline_sentence_embed(tweet_vectors, sentence_vector.front(), top_k);
}

}  // namespace t2s
