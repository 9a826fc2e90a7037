#include "qrp/feedback.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "qrp/tokenizer.hpp"

namespace qrp {
namespace {

void check_counts(std::size_t fb_docs, std::size_t fb_terms) {
    if (fb_docs == 0) throw std::invalid_argument("fb_docs must be >= 1");
    if (fb_terms == 0) throw std::invalid_argument("fb_terms must be >= 1");
}

// Heaviest `n` entries of `weights`, ties broken by term ascending.
std::vector<std::pair<std::string, double>> top_terms(const TermWeights& weights, std::size_t n) {
    std::vector<std::pair<std::string, double>> items(weights.begin(), weights.end());
    const auto take = std::min(n, items.size());
    std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(take), items.end(),
                      [](const auto& a, const auto& b) {
                          if (a.second != b.second) return a.second > b.second;
                          return a.first < b.first;
                      });
    items.resize(take);
    return items;
}

void normalize(TermWeights& weights) {
    double total = 0.0;
    for (const auto& [_, w] : weights) total += w;
    if (total <= 0.0) return;
    for (auto& [_, w] : weights) w /= total;
}

void drop_nonpositive(TermWeights& weights) {
    std::erase_if(weights, [](const auto& kv) { return !(kv.second > 0.0); });
}

}  // namespace

TermWeights query_distribution(std::string_view query) {
    auto weights = query_term_weights(query);
    normalize(weights);
    return weights;
}

WeightedQuery rm3_expand(const InvertedIndex& index, std::string_view query,
                         const Rm3Params& params, const Bm25Params& bm25) {
    check_counts(params.fb_docs, params.fb_terms);
    if (params.orig_weight < 0.0 || params.orig_weight > 1.0) {
        throw std::invalid_argument("orig_weight must lie in [0, 1]");
    }
    WeightedQuery out{query_distribution(query), FeedbackOrigin::rm3};
    if (out.terms.empty() || index.num_docs() == 0) return out;

    const auto first = retrieve_topk(index, query_term_weights(query),
                                     RetrievalOptions{params.fb_docs, 0, bm25});
    if (first.entries.empty()) return out;

    double score_total = 0.0;
    for (const auto& e : first.entries) score_total += e.score;

    TermWeights feedback;
    for (const auto& e : first.entries) {
        const auto ordinal = *index.ordinal_of(e.doc_id);
        const double len = index.doc_length(ordinal);
        const double doc_weight = e.score / score_total;
        for (const auto& [term, tf] : index.term_counts(ordinal)) {
            feedback[term] += doc_weight * static_cast<double>(tf) / len;
        }
    }
    TermWeights kept;
    for (auto& [term, w] : top_terms(feedback, params.fb_terms)) kept.emplace(term, w);
    normalize(kept);

    TermWeights mixed;
    for (const auto& [term, p] : out.terms) mixed[term] += params.orig_weight * p;
    for (const auto& [term, p] : kept) mixed[term] += (1.0 - params.orig_weight) * p;
    drop_nonpositive(mixed);
    normalize(mixed);
    out.terms = std::move(mixed);
    return out;
}

WeightedQuery rocchio_expand(const InvertedIndex& index, std::string_view query,
                             const RocchioParams& params, const Bm25Params& bm25) {
    check_counts(params.fb_docs, params.fb_terms);
    const auto query_counts = query_term_weights(query);
    WeightedQuery out{query_counts, FeedbackOrigin::rocchio};
    if (query_counts.empty() || index.num_docs() == 0) return out;

    const auto first =
        retrieve_topk(index, query_counts, RetrievalOptions{params.fb_docs, 0, bm25});
    if (first.entries.empty()) return out;

    TermWeights centroid;
    const double inv_docs = 1.0 / static_cast<double>(first.entries.size());
    for (const auto& e : first.entries) {
        const auto ordinal = *index.ordinal_of(e.doc_id);
        for (const auto& [term, tf] : index.term_counts(ordinal)) {
            centroid[term] += inv_docs * static_cast<double>(tf) * index.idf(term);
        }
    }

    TermWeights non_query;
    for (const auto& [term, w] : centroid) {
        if (!query_counts.contains(term)) non_query.emplace(term, w);
    }
    TermWeights weights;
    for (const auto& [term, count] : query_counts) {
        const auto it = centroid.find(term);
        const double c = it == centroid.end() ? 0.0 : it->second;
        weights[term] = params.alpha * count + params.beta * c;
    }
    for (const auto& [term, c] : top_terms(non_query, params.fb_terms)) {
        weights[term] = params.beta * c;
    }
    drop_nonpositive(weights);
    out.terms = std::move(weights);
    return out;
}

}  // namespace qrp
