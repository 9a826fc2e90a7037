#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>

#include "qrp/trec.hpp"

namespace qrp {

using Grades = std::map<std::string, int>;

/// nDCG@k with gain 2^g − 1 and log2(rank + 1) discount. Unjudged documents
/// have grade 0. Returns 0 when the query has no document with grade > 0.
[[nodiscard]] double ndcg_at_k(std::span<const std::string> ranked, const Grades& grades, std::size_t k = 10);

/// AP over the top k with relevance = grade >= binarize_at, normalized by
/// the total number of relevant judgments R. 0 when R = 0.
[[nodiscard]] double average_precision_at_k(std::span<const std::string> ranked, const Grades& grades,
                                            std::size_t k = 1000, int binarize_at = 2);

/// |relevant ∩ top k| / R; 0 when R = 0.
[[nodiscard]] double recall_at_k(std::span<const std::string> ranked, const Grades& grades,
                                 std::size_t k = 1000, int binarize_at = 2);

struct MetricsOptions {
    std::size_t ndcg_depth = 10;
    std::size_t depth = 1000;  // mAP and recall cutoff
    int binarize_at = 2;
};

struct QueryMetrics {
    double map = 0.0;
    double ndcg = 0.0;
    double recall = 0.0;
};

struct MetricsReport {
    std::map<std::string, QueryMetrics> per_query;  // every query in the qrels
    QueryMetrics mean;
    std::size_t judged_queries = 0;    // qrels queries (missing from the run score 0)
    std::size_t unjudged_queries = 0;  // run queries without judgments
    MetricsOptions options;
    std::string run_tag;
    std::string config_hash;
};

/// Throws DataError when the run and qrels share no query.
[[nodiscard]] MetricsReport evaluate_run(const Run& run, const Qrels& qrels, const MetricsOptions& options = {});

/// Fixed-width table with one row per query and a final "all" row.
void write_report_table(const MetricsReport& report, std::ostream& out);
/// `query_id,map,ndcg,recall` plus an "all" row; metric columns carry the
/// cutoffs in their names.
void write_report_csv(const MetricsReport& report, std::ostream& out);
void write_report_csv(const MetricsReport& report, const std::filesystem::path& path);

}  // namespace qrp
