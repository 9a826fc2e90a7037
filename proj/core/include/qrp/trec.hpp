#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "qrp/inverted_index.hpp"

namespace qrp {

/// query_id -> (doc_id -> grade >= 0).
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;

    [[nodiscard]] std::size_t num_judgments() const;
    [[nodiscard]] const std::map<std::string, int>* find(const std::string& query_id) const;
};

/// `query_id iter doc_id grade` lines. Rejects malformed lines, negative
/// grades and repeated (query, doc) pairs.
[[nodiscard]] Qrels parse_qrels(std::istream& in, const std::string& source = "<qrels>");
[[nodiscard]] Qrels parse_qrels(const std::filesystem::path& path);

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    std::size_t rank = 0;  // 1-based
    double score = 0.0;
    std::string tag;
    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// Ranked lists keyed by query_id, each sorted by rank.
struct Run {
    std::map<std::string, std::vector<RunEntry>> by_query;

    [[nodiscard]] std::vector<std::string> ranked_doc_ids(const std::string& query_id) const;
    friend bool operator==(const Run&, const Run&) = default;
};

/// `query_id Q0 doc_id rank score tag` lines, any order. Within a query the
/// ranks must be exactly 1..n, scores non-increasing with rank and doc ids
/// unique.
[[nodiscard]] Run parse_run(std::istream& in, const std::string& source = "<run>");
[[nodiscard]] Run parse_run(const std::filesystem::path& path);

/// Checks the per-query invariants; throws DataError naming the query.
void validate_run(const Run& run);

/// Queries ascending, ranks ascending, scores with 6 decimals.
void write_run(const Run& run, std::ostream& out);
void write_run(const Run& run, const std::filesystem::path& path);

/// Appends one ranked list built from a retrieval result.
void append_to_run(Run& run, const RetrievalContext& context, const std::string& tag);

}  // namespace qrp
