#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrp/inverted_index.hpp"

namespace qrp {

struct FeatureConfig {
    std::uint32_t dim = 1u << 18;
    int max_ngram = 2;  // word n-grams of order 1..max_ngram
    std::size_t snippet_cap = 64;
    std::uint64_t hash_seed = 0;

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

[[nodiscard]] nlohmann::json to_json(const FeatureConfig& config);
[[nodiscard]] FeatureConfig feature_config_from_json(const nlohmann::json& body);

/// Sparse vector with strictly increasing indices in [0, dim) and positive
/// values.
struct FeatureVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::uint32_t dim = 0;

    [[nodiscard]] std::size_t nnz() const noexcept { return indices.size(); }
    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Hashed word n-gram counts of the query ("q:" namespace) and of every
/// context snippet truncated to snippet_cap tokens ("d:" namespace).
[[nodiscard]] FeatureVector featurize(std::string_view query, const RetrievalContext& context,
                                      const FeatureConfig& config);

}  // namespace qrp
