#pragma once

// HTTP clients for the inference service: POST /score and POST /embed.

#include <chrono>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "t2s/baselines.hpp"
#include "t2s/common.hpp"
#include "t2s/scoring.hpp"

namespace t2s {

inline constexpr const char* kDefaultProviderUrl = "http://127.0.0.1:8008";

/// T2S_PROVIDER_URL when set, otherwise `fallback`.
inline std::string provider_url_from_env(const std::string& fallback = kDefaultProviderUrl) {
    if (const char* env = std::getenv("T2S_PROVIDER_URL"); env && *env) {
        return env;
    }
    return fallback;
}

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

namespace detail {

/// POSTs `body` to `path`, retrying transport errors and 5xx answers with
/// exponential backoff. 4xx answers fail immediately.
inline nlohmann::json post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body,
                                const RetryPolicy& retry, std::chrono::seconds timeout) {
    std::string last_error;
    auto backoff = retry.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, retry.attempts); ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(base_url);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        const auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
            continue;
        }
        if (res->status != 200) {
            throw ProviderError(base_url + path + " answered HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(base_url + path + " returned invalid JSON: " + e.what());
        }
    }
    throw ProviderError(base_url + path + " failed after " + std::to_string(retry.attempts) +
                        " attempt(s); last error: " + last_error);
}

}  // namespace detail

/// Scores pairs through the inference service's /score endpoint.
/// Request: {"model": name, "pairs": [{"premise", "hypothesis"}, ...]};
/// response: {"scores": [...]} aligned with the pairs.
class RemoteProvider final : public ScoreProvider {
public:
    explicit RemoteProvider(std::string base_url, RetryPolicy retry = {},
                            std::chrono::seconds timeout = std::chrono::seconds{300})
        : base_url_(std::move(base_url)), retry_(retry), timeout_(timeout) {}

    std::vector<double> score(const ModelId& model, std::span<const ScorePair> pairs) override {
        if (pairs.empty()) {
            return {};
        }
        nlohmann::json body{{"model", model.name()}, {"pairs", nlohmann::json::array()}};
        for (const auto& p : pairs) {
            body["pairs"].push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
        }
        const auto reply = detail::post_json(base_url_, "/score", body, retry_, timeout_);
        std::vector<double> scores;
        try {
            scores = reply.at("scores").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError("/score reply lacks a numeric 'scores' array: " + std::string(e.what()));
        }
        if (scores.size() != pairs.size()) {
            throw ProtocolError("/score returned " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(pairs.size()) + " pairs");
        }
        for (double s : scores) {
            if (!is_valid_score(s)) {
                throw ProtocolError("/score returned a score outside [0,1]: " + std::to_string(s));
            }
        }
        return scores;
    }

    const std::string& base_url() const { return base_url_; }

private:
    std::string base_url_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
};

/// Embeds texts through /embed: {"model", "texts"} -> {"dim", "vectors"}.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(std::string base_url, std::string model, RetryPolicy retry = {},
                   std::chrono::seconds timeout = std::chrono::seconds{300}, std::size_t batch_size = 64)
        : base_url_(std::move(base_url)),
          model_(std::move(model)),
          retry_(retry),
          timeout_(timeout),
          batch_size_(std::max<std::size_t>(1, batch_size)) {}

    std::vector<EmbeddingVector> embed(std::span<const Item> items) override {
        std::vector<EmbeddingVector> out;
        out.reserve(items.size());
        for (std::size_t lo = 0; lo < items.size(); lo += batch_size_) {
            const auto chunk = items.subspan(lo, std::min(batch_size_, items.size() - lo));
            nlohmann::json body{{"model", model_}, {"texts", nlohmann::json::array()}};
            for (const auto& item : chunk) {
                body["texts"].push_back(item.text);
            }
            const auto reply = detail::post_json(base_url_, "/embed", body, retry_, timeout_);
            std::vector<std::vector<double>> vectors;
            std::size_t dim = 0;
            try {
                dim = reply.at("dim").get<std::size_t>();
                vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
            } catch (const nlohmann::json::exception& e) {
                throw ProtocolError("/embed reply malformed: " + std::string(e.what()));
            }
            if (vectors.size() != chunk.size()) {
                throw ProtocolError("/embed returned a misaligned batch");
            }
            for (auto& v : vectors) {
                if (v.size() != dim || dim == 0) {
                    throw ProtocolError("/embed vector length does not match dim");
                }
                out.push_back(EmbeddingVector{std::move(v)});
            }
        }
        return out;
    }

private:
    std::string base_url_;
    std::string model_;
    RetryPolicy retry_;
    std::chrono::seconds timeout_;
    std::size_t batch_size_;
};

}  // namespace t2s
