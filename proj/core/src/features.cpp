#include "qrp/features.hpp"

#include <map>
#include <stdexcept>

#include "qrp/hash.hpp"
#include "qrp/tokenizer.hpp"

namespace qrp {

nlohmann::json to_json(const FeatureConfig& config) {
    return {{"dim", config.dim},
            {"max_ngram", config.max_ngram},
            {"snippet_cap", config.snippet_cap},
            {"hash_seed", config.hash_seed}};
}

FeatureConfig feature_config_from_json(const nlohmann::json& body) {
    FeatureConfig config;
    config.dim = body.at("dim").get<std::uint32_t>();
    config.max_ngram = body.at("max_ngram").get<int>();
    config.snippet_cap = body.at("snippet_cap").get<std::size_t>();
    config.hash_seed = body.at("hash_seed").get<std::uint64_t>();
    return config;
}

namespace {

void add_ngrams(std::string_view ns, const std::vector<std::string>& tokens, std::size_t limit,
                const FeatureConfig& config, std::map<std::uint32_t, double>& counts) {
    const auto n_tokens = std::min(limit, tokens.size());
    std::string key;
    for (std::size_t i = 0; i < n_tokens; ++i) {
        key.assign(ns);
        for (int order = 1; order <= config.max_ngram && i + static_cast<std::size_t>(order) <= n_tokens;
             ++order) {
            if (order > 1) key.push_back(' ');
            key += tokens[i + static_cast<std::size_t>(order) - 1];
            counts[static_cast<std::uint32_t>(stable_hash64(key, config.hash_seed) % config.dim)] += 1.0;
        }
    }
}

}  // namespace

FeatureVector featurize(std::string_view query, const RetrievalContext& context,
                        const FeatureConfig& config) {
    if (config.dim == 0) throw std::invalid_argument("feature dimension must be >= 1");
    std::map<std::uint32_t, double> counts;
    const auto q_tokens = tokenize(query);
    add_ngrams("q:", q_tokens, q_tokens.size(), config, counts);
    for (const auto& entry : context.entries) {
        add_ngrams("d:", tokenize(entry.snippet), config.snippet_cap, config, counts);
    }
    FeatureVector fv;
    fv.dim = config.dim;
    fv.indices.reserve(counts.size());
    fv.values.reserve(counts.size());
    for (const auto& [idx, v] : counts) {
        fv.indices.push_back(idx);
        fv.values.push_back(v);
    }
    return fv;
}

}  // namespace qrp
