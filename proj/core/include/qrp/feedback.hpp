#pragma once

#include <string_view>

#include "qrp/inverted_index.hpp"

namespace qrp {

enum class FeedbackOrigin { rm3, rocchio };

/// An expanded query. Every weight is strictly positive.
struct WeightedQuery {
    TermWeights terms;
    FeedbackOrigin origin = FeedbackOrigin::rm3;
};

struct Rm3Params {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double orig_weight = 0.5;  // in [0, 1]
};

struct RocchioParams {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double alpha = 1.0;
    double beta = 0.75;
};

/// Query-likelihood term distribution: count / query length.
[[nodiscard]] TermWeights query_distribution(std::string_view query);

/// RM3 pseudo-relevance feedback.
///
/// The top fb_docs BM25 documents are weighted by score / Σ scores. The
/// feedback model is P_fb(t) ∝ Σ_d w_d · tf(t,d) / len(d), truncated to its
/// fb_terms heaviest terms (ties by term) and renormalized, then mixed as
/// orig_weight·P_query + (1 − orig_weight)·P_fb. The result sums to 1.
/// An empty first pass returns P_query unchanged.
[[nodiscard]] WeightedQuery rm3_expand(const InvertedIndex& index, std::string_view query,
                                       const Rm3Params& params = {},
                                       const Bm25Params& bm25 = {});

/// Positive-only Rocchio.
///
/// weight(t) = alpha·tf_query(t) + beta·centroid(t), where centroid is the
/// mean tf·idf vector of the feedback documents. Keeps every query term plus
/// the fb_terms heaviest non-query terms; zero weights are dropped. An empty
/// first pass returns the raw query term counts.
[[nodiscard]] WeightedQuery rocchio_expand(const InvertedIndex& index, std::string_view query,
                                           const RocchioParams& params = {},
                                           const Bm25Params& bm25 = {});

}  // namespace qrp
