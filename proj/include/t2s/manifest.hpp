#pragma once

// Experiment manifest: one JSON file naming the inputs, the provider and the
// grid axes. Command-line flags override individual keys.
//
// {
//   "tweets": "dump.jsonl", "statements": "statements.csv",
//   "ground_truth": "ground_truth.csv", "cache_dir": "cache", "output_dir": "out",
//   "provider": {"kind": "cache|replay|remote|mock", "url": "...", "replay_file": "..."},
//   "languages": {"pivot": "en", "source": "it", "topic_templates": {"it": "... {topic} ..."}},
//   "grid": {"models": [...], "windows": [...], "algorithms": [...], "thresholds": [...],
//            "m": 3, "alg1_swap_weights": false},
//   "parties": [...], "jobs": 8, "batch_size": 16
// }

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "t2s/common.hpp"
#include "t2s/evaluation.hpp"
#include "t2s/scoring.hpp"

namespace t2s {

enum class ProviderKind { cache, replay, remote, mock };

inline ProviderKind parse_provider_kind(std::string_view s) {
    if (s == "cache") return ProviderKind::cache;
    if (s == "replay") return ProviderKind::replay;
    if (s == "remote") return ProviderKind::remote;
    if (s == "mock") return ProviderKind::mock;
    throw DataError("unknown provider kind '" + std::string(s) + "' (cache, replay, remote, mock)");
}

struct ProviderSettings {
    ProviderKind kind = ProviderKind::cache;
    std::string url;  // empty: T2S_PROVIDER_URL or the default endpoint
    std::string replay_file;
};

struct RunManifest {
    std::string tweets;
    std::string statements;
    std::string ground_truth;
    std::string cache_dir;
    std::string output_dir;
    ProviderSettings provider;
    LanguageSettings languages;
    GridSpec grid = GridSpec::full();
    std::vector<std::string> parties;
    std::size_t jobs = 0;  // 0: all processors
    std::size_t batch_size = 16;

    static RunManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
        RunManifest m;
        const auto path_of = [&](const char* key) -> std::string {
            if (!j.contains(key)) {
                return {};
            }
            std::filesystem::path p = j.at(key).get<std::string>();
            if (p.is_relative() && !base_dir.empty()) {
                p = base_dir / p;
            }
            return p.string();
        };
        try {
            m.tweets = path_of("tweets");
            m.statements = path_of("statements");
            m.ground_truth = path_of("ground_truth");
            m.cache_dir = path_of("cache_dir");
            m.output_dir = path_of("output_dir");
            if (j.contains("provider")) {
                const auto& p = j.at("provider");
                m.provider.kind = parse_provider_kind(p.value("kind", std::string("cache")));
                m.provider.url = p.value("url", std::string());
                m.provider.replay_file = p.value("replay_file", std::string());
                if (!m.provider.replay_file.empty() && !base_dir.empty() &&
                    std::filesystem::path(m.provider.replay_file).is_relative()) {
                    m.provider.replay_file = (base_dir / m.provider.replay_file).string();
                }
            }
            if (j.contains("languages")) {
                const auto& l = j.at("languages");
                m.languages.pivot_lang = l.value("pivot", m.languages.pivot_lang);
                m.languages.source_lang = l.value("source", m.languages.source_lang);
                if (l.contains("topic_templates")) {
                    for (const auto& [lang, tmpl] : l.at("topic_templates").items()) {
                        m.languages.topic_templates[lang] = tmpl.get<std::string>();
                    }
                }
            }
            if (j.contains("grid")) {
                const auto& g = j.at("grid");
                if (g.contains("models")) {
                    m.grid.models.clear();
                    for (const auto& s : g.at("models")) {
                        m.grid.models.push_back(ModelId::parse(s.get<std::string>()));
                    }
                }
                if (g.contains("windows")) {
                    m.grid.windows.clear();
                    for (const auto& s : g.at("windows")) {
                        m.grid.windows.push_back(DatasetWindow::parse(s.get<std::string>()));
                    }
                }
                if (g.contains("algorithms")) {
                    m.grid.algorithms.clear();
                    for (const auto& s : g.at("algorithms")) {
                        m.grid.algorithms.push_back(parse_algorithm(s.get<std::string>()));
                    }
                }
                if (g.contains("thresholds")) {
                    m.grid.thresholds = g.at("thresholds").get<std::vector<double>>();
                }
                m.grid.min_support = g.value("m", m.grid.min_support);
                m.grid.alg1_swap_weights = g.value("alg1_swap_weights", false);
            }
            if (j.contains("parties")) {
                m.parties = j.at("parties").get<std::vector<std::string>>();
            }
            m.jobs = j.value("jobs", std::size_t{0});
            m.batch_size = j.value("batch_size", std::size_t{16});
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed manifest: ") + e.what());
        }
        return m;
    }

    static RunManifest load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw DataError("cannot read manifest: " + path);
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest " + path + " is not valid JSON: " + e.what());
        }
        return from_json(j, std::filesystem::path(path).parent_path());
    }

    /// Checks that the named input files exist and the grid axes are usable.
    void validate(bool need_ground_truth) const {
        const auto require = [](const std::string& path, const char* what) {
            if (path.empty()) {
                throw DataError(std::string("no ") + what + " path given");
            }
            if (!std::filesystem::exists(path)) {
                throw DataError(std::string(what) + " not found: " + path);
            }
        };
        require(tweets, "tweets");
        require(statements, "statements");
        if (need_ground_truth) {
            require(ground_truth, "ground_truth");
        }
        if (provider.kind == ProviderKind::replay) {
            require(provider.replay_file, "provider.replay_file");
        }
        grid.validate();
        if (batch_size == 0) {
            throw DataError("batch_size must be >= 1");
        }
    }
};

}  // namespace t2s
