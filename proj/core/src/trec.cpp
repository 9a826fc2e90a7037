#include "qrp/trec.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "qrp/error.hpp"

namespace qrp {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string f;
    while (in >> f) fields.push_back(std::move(f));
    return fields;
}

template <typename T>
bool parse_number(const std::string& text, T& value) {
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    return res.ec == std::errc{} && res.ptr == end;
}

bool parse_double(const std::string& text, double& value) {
    try {
        std::size_t used = 0;
        value = std::stod(text, &used);
        return used == text.size() && std::isfinite(value);
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

std::size_t Qrels::num_judgments() const {
    std::size_t n = 0;
    for (const auto& [_, docs] : judgments) n += docs.size();
    return n;
}

const std::map<std::string, int>* Qrels::find(const std::string& query_id) const {
    const auto it = judgments.find(query_id);
    return it == judgments.end() ? nullptr : &it->second;
}

Qrels parse_qrels(std::istream& in, const std::string& source) {
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        int grade = 0;
        if (f.size() != 4 || !parse_number(f[3], grade)) {
            throw DataError(source, lineno, "expected 'query_id iter doc_id grade'");
        }
        if (grade < 0) throw DataError(source, lineno, fmt::format("negative grade {}", grade));
        if (!qrels.judgments[f[0]].emplace(f[2], grade).second) {
            throw DataError(source, lineno, fmt::format("repeated judgment for ({}, {})", f[0], f[2]));
        }
    }
    return qrels;
}

Qrels parse_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels " + path.string());
    return parse_qrels(in, path.string());
}

std::vector<std::string> Run::ranked_doc_ids(const std::string& query_id) const {
    std::vector<std::string> ids;
    if (const auto it = by_query.find(query_id); it != by_query.end()) {
        ids.reserve(it->second.size());
        for (const auto& e : it->second) ids.push_back(e.doc_id);
    }
    return ids;
}

void validate_run(const Run& run) {
    for (const auto& [qid, entries] : run.by_query) {
        std::unordered_set<std::string> docs;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            if (e.rank != i + 1) {
                throw DataError(fmt::format("query {}: ranks are not dense 1..n (found rank {} at position {})",
                                            qid, e.rank, i + 1));
            }
            if (i > 0 && e.score > entries[i - 1].score) {
                throw DataError(fmt::format("query {}: score increases at rank {}", qid, e.rank));
            }
            if (!docs.insert(e.doc_id).second) {
                throw DataError(fmt::format("query {}: document {} appears twice", qid, e.doc_id));
            }
        }
    }
}

Run parse_run(std::istream& in, const std::string& source) {
    Run run;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        RunEntry e;
        if (f.size() != 6 || !parse_number(f[3], e.rank) || !parse_double(f[4], e.score) || e.rank == 0) {
            throw DataError(source, lineno, "expected 'query_id Q0 doc_id rank score tag'");
        }
        e.query_id = f[0];
        e.doc_id = f[2];
        e.tag = f[5];
        run.by_query[e.query_id].push_back(std::move(e));
    }
    for (auto& [_, entries] : run.by_query) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    }
    validate_run(run);
    return run;
}

Run parse_run(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run " + path.string());
    return parse_run(in, path.string());
}

void write_run(const Run& run, std::ostream& out) {
    for (const auto& [qid, entries] : run.by_query) {
        for (const auto& e : entries) {
            out << fmt::format("{} Q0 {} {} {:.6f} {}\n", qid, e.doc_id, e.rank, e.score, e.tag);
        }
    }
}

void write_run(const Run& run, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write run " + path.string());
    write_run(run, out);
    if (!out) throw DataError("failed writing run " + path.string());
}

void append_to_run(Run& run, const RetrievalContext& context, const std::string& tag) {
    auto& entries = run.by_query[context.query_id];
    entries.clear();
    entries.reserve(context.entries.size());
    for (std::size_t i = 0; i < context.entries.size(); ++i) {
        const auto& c = context.entries[i];
        entries.push_back({context.query_id, c.doc_id, i + 1, c.score, tag});
    }
}

}  // namespace qrp
