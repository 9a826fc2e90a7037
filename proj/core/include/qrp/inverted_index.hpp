#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qrp/corpus.hpp"

namespace qrp {

/// BM25 free parameters. Defaults follow the usual MS MARCO passage setup.
struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

/// Query term -> weight. Ordered so that score accumulation order, and
/// therefore every floating-point result, is independent of how the
/// weights were produced.
using TermWeights = std::map<std::string, double>;

/// Unweighted query: each term weighted by its count in the query.
[[nodiscard]] TermWeights query_term_weights(std::string_view text);

struct Posting {
    std::uint32_t doc;  // ordinal
    std::uint32_t tf;
};

/// Immutable in-memory inverted index. Documents are assigned ordinals in
/// ascending doc_id order, so the index (and every result computed from it)
/// is the same whatever order the documents were supplied in. Safe for
/// concurrent readers.
class InvertedIndex {
public:
    InvertedIndex() = default;

    /// Throws DataError naming the id when doc_ids are not unique, or
    /// when an id is empty.
    [[nodiscard]] static InvertedIndex build(std::vector<Document> docs);

    [[nodiscard]] std::size_t num_docs() const noexcept { return doc_ids_.size(); }
    [[nodiscard]] double avg_doc_length() const noexcept { return avg_doc_length_; }
    [[nodiscard]] std::size_t vocabulary_size() const noexcept { return postings_.size(); }

    [[nodiscard]] const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
    [[nodiscard]] const std::string& doc_text(std::uint32_t ordinal) const { return texts_.at(ordinal); }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t ordinal) const { return doc_lengths_.at(ordinal); }
    [[nodiscard]] std::optional<std::uint32_t> ordinal_of(std::string_view doc_id) const;

    /// Postings sorted by ordinal; empty for unknown terms.
    [[nodiscard]] std::span<const Posting> postings(const std::string& term) const;
    [[nodiscard]] std::size_t document_frequency(const std::string& term) const {
        return postings(term).size();
    }
    /// ln(1 + (N - df + 0.5) / (df + 0.5)); never negative.
    [[nodiscard]] double idf(const std::string& term) const;
    [[nodiscard]] std::uint32_t term_frequency(const std::string& term, std::uint32_t ordinal) const;

    /// Term counts of one document, recomputed from its stored text.
    [[nodiscard]] std::map<std::string, std::uint32_t> term_counts(std::uint32_t ordinal) const;

    /// Sorted list of indexed terms.
    [[nodiscard]] std::vector<std::string> terms() const;

    void save(const std::filesystem::path& path) const;
    [[nodiscard]] static InvertedIndex load(const std::filesystem::path& path);
    /// True when the file starts with the binary index magic.
    [[nodiscard]] static bool is_index_file(const std::filesystem::path& path);

private:
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> ordinal_by_id_;
    std::vector<std::string> doc_ids_;
    std::vector<std::string> texts_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
};

/// Loads a binary index, or builds one from a TSV corpus.
[[nodiscard]] InvertedIndex open_corpus(const std::filesystem::path& path);

/// Σ_t w_t · idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·len/avgdl)).
/// Unknown terms contribute 0. Throws std::invalid_argument on an empty
/// index and std::out_of_range on a bad ordinal.
[[nodiscard]] double bm25_score(const InvertedIndex& index, const TermWeights& query,
                                std::uint32_t ordinal, const Bm25Params& params = {});

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

struct ContextEntry {
    std::string doc_id;
    double score = 0.0;
    std::string snippet;  // first snippet_tokens tokens, single-space joined
};

/// D_k(q): the top-k documents for a query, best first, ties by doc_id.
struct RetrievalContext {
    std::string query_id;
    std::size_t k = 0;
    std::vector<ContextEntry> entries;
};

struct RetrievalOptions {
    std::size_t k = 1000;
    std::size_t snippet_tokens = 64;  // 0 leaves snippets empty
    Bm25Params bm25{};
};

/// Default depth of contexts handed to the selector and generator.
inline constexpr std::size_t kDefaultContextDepth = 3;
/// Default depth of evaluation runs.
inline constexpr std::size_t kDefaultRunDepth = 1000;

/// Returns min(k, #docs with score > 0) entries, sorted by score descending
/// then doc_id ascending. Throws std::invalid_argument when k == 0.
[[nodiscard]] RetrievalContext retrieve_topk(const InvertedIndex& index, const TermWeights& query,
                                             const RetrievalOptions& options,
                                             std::string query_id = {});
[[nodiscard]] RetrievalContext retrieve_topk(const InvertedIndex& index, std::string_view query,
                                             const RetrievalOptions& options,
                                             std::string query_id = {});

}  // namespace qrp
