#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qrp {

struct Document {
    std::string doc_id;
    std::string text;
};

struct Query {
    std::string query_id;
    std::string text;
};

/// Reads `doc_id<TAB>text` lines (UTF-8, no header). Everything after the
/// first tab is the text, so an empty text is allowed. Blank lines are
/// skipped; a line without a tab or with an empty id is a DataError.
[[nodiscard]] std::vector<Document> read_documents_tsv(const std::filesystem::path& path);

/// Reads `query_id<TAB>text` lines; same rules as read_documents_tsv, and
/// duplicate query ids are rejected.
[[nodiscard]] std::vector<Query> read_queries_tsv(const std::filesystem::path& path);

/// Splits `line` on tabs. A trailing carriage return is stripped first.
[[nodiscard]] std::vector<std::string> split_tabs(std::string_view line);

}  // namespace qrp
