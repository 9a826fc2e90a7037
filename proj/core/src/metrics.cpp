#include "qrp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "qrp/error.hpp"

namespace qrp {

namespace {

int grade_of(const Grades& grades, const std::string& doc) {
    const auto it = grades.find(doc);
    return it == grades.end() ? 0 : it->second;
}

std::size_t count_relevant(const Grades& grades, int binarize_at) {
    return static_cast<std::size_t>(
        std::count_if(grades.begin(), grades.end(), [&](const auto& kv) { return kv.second >= binarize_at; }));
}

double gain(int grade) { return std::exp2(static_cast<double>(grade)) - 1.0; }

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked, const Grades& grades, std::size_t k) {
    const auto depth = std::min(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        dcg += gain(grade_of(grades, ranked[i])) / std::log2(static_cast<double>(i) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [_, g] : grades) {
        if (g > 0) ideal.push_back(g);
    }
    if (ideal.empty()) return 0.0;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += gain(ideal[i]) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg / idcg;
}

double average_precision_at_k(std::span<const std::string> ranked, const Grades& grades, std::size_t k,
                              int binarize_at) {
    const auto total_relevant = count_relevant(grades, binarize_at);
    if (total_relevant == 0) return 0.0;
    const auto depth = std::min(k, ranked.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (grade_of(grades, ranked[i]) >= binarize_at) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

double recall_at_k(std::span<const std::string> ranked, const Grades& grades, std::size_t k, int binarize_at) {
    const auto total_relevant = count_relevant(grades, binarize_at);
    if (total_relevant == 0) return 0.0;
    const auto depth = std::min(k, ranked.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (grade_of(grades, ranked[i]) >= binarize_at) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total_relevant);
}

MetricsReport evaluate_run(const Run& run, const Qrels& qrels, const MetricsOptions& options) {
    if (options.binarize_at < 1) throw ConfigError("binarize_at must be >= 1");
    MetricsReport report;
    report.options = options;
    std::size_t overlap = 0;
    for (const auto& [qid, entries] : run.by_query) {
        if (qrels.find(qid) == nullptr) ++report.unjudged_queries;
        else ++overlap;
        if (report.run_tag.empty() && !entries.empty()) report.run_tag = entries.front().tag;
    }
    if (overlap == 0) throw DataError("run and qrels have no query in common");

    for (const auto& [qid, grades] : qrels.judgments) {
        const auto ranked = run.ranked_doc_ids(qid);
        QueryMetrics m;
        m.map = average_precision_at_k(ranked, grades, options.depth, options.binarize_at);
        m.ndcg = ndcg_at_k(ranked, grades, options.ndcg_depth);
        m.recall = recall_at_k(ranked, grades, options.depth, options.binarize_at);
        report.mean.map += m.map;
        report.mean.ndcg += m.ndcg;
        report.mean.recall += m.recall;
        report.per_query.emplace(qid, m);
    }
    report.judged_queries = report.per_query.size();
    const double n = static_cast<double>(report.judged_queries);
    report.mean.map /= n;
    report.mean.ndcg /= n;
    report.mean.recall /= n;
    return report;
}

void write_report_table(const MetricsReport& report, std::ostream& out) {
    const auto& o = report.options;
    const auto map_col = fmt::format("mAP@{}", o.depth);
    const auto ndcg_col = fmt::format("nDCG@{}", o.ndcg_depth);
    const auto rec_col = fmt::format("R@{}", o.depth);
    out << fmt::format("{:<16} {:>10} {:>10} {:>10}\n", "query", map_col, ndcg_col, rec_col);
    for (const auto& [qid, m] : report.per_query) {
        out << fmt::format("{:<16} {:>10.4f} {:>10.4f} {:>10.4f}\n", qid, m.map, m.ndcg, m.recall);
    }
    out << fmt::format("{:<16} {:>10.4f} {:>10.4f} {:>10.4f}\n", "all", report.mean.map, report.mean.ndcg,
                       report.mean.recall);
    out << fmt::format("judged queries: {}, unjudged run queries: {}", report.judged_queries,
                       report.unjudged_queries);
    if (!report.run_tag.empty()) out << ", run: " << report.run_tag;
    out << '\n';
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
    const auto& o = report.options;
    if (!report.config_hash.empty()) out << "# config_hash=" << report.config_hash << '\n';
    out << fmt::format("query_id,map_cut_{},ndcg_cut_{},recall_{}\n", o.depth, o.ndcg_depth, o.depth);
    for (const auto& [qid, m] : report.per_query) {
        out << fmt::format("{},{:.6f},{:.6f},{:.6f}\n", qid, m.map, m.ndcg, m.recall);
    }
    out << fmt::format("all,{:.6f},{:.6f},{:.6f}\n", report.mean.map, report.mean.ndcg, report.mean.recall);
}

void write_report_csv(const MetricsReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write report " + path.string());
    write_report_csv(report, out);
}

}  // namespace qrp
