#include "qrp/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "qrp/error.hpp"

namespace qrp {
namespace {

template <typename Row>
std::vector<Row> read_two_column(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + std::string(what) + " file " + path.string());
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw DataError(path.string(), lineno, "expected <id><TAB><text>");
        }
        if (tab == 0) throw DataError(path.string(), lineno, "empty id");
        rows.push_back(Row{line.substr(0, tab), line.substr(tab + 1)});
    }
    return rows;
}

}  // namespace

std::vector<std::string> split_tabs(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::vector<Document> read_documents_tsv(const std::filesystem::path& path) {
    return read_two_column<Document>(path, "corpus");
}

std::vector<Query> read_queries_tsv(const std::filesystem::path& path) {
    auto queries = read_two_column<Query>(path, "queries");
    std::unordered_set<std::string> seen;
    for (const auto& q : queries) {
        if (!seen.insert(q.query_id).second) {
            throw DataError("duplicate query_id '" + q.query_id + "' in " + path.string());
        }
    }
    return queries;
}

}  // namespace qrp
