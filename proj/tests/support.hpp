#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrp/corpus.hpp"
#include "qrp/patterns.hpp"

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("qrp-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

using RawCorpus = std::vector<std::pair<std::string, std::string>>;

/// Random corpus of lowercase words "t0".."t{vocab-1}"; ids are zero-padded
/// so lexical and numeric order agree.
inline RawCorpus random_corpus(std::mt19937_64& rng, std::size_t max_docs, std::size_t vocab,
                               std::size_t max_len = 30) {
    std::uniform_int_distribution<std::size_t> n_docs(1, max_docs);
    std::uniform_int_distribution<std::size_t> len(0, max_len);
    // Zipf-ish skew so document frequencies vary.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RawCorpus docs;
    const auto n = n_docs(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const auto l = len(rng);
        for (std::size_t j = 0; j < l; ++j) {
            const auto term = static_cast<std::size_t>(std::pow(u(rng), 2.0) * static_cast<double>(vocab));
            if (!text.empty()) text += ' ';
            text += "t" + std::to_string(std::min(term, vocab - 1));
        }
        char id[32];
        std::snprintf(id, sizeof id, "d%04zu", i);
        docs.emplace_back(id, text);
    }
    return docs;
}

inline std::vector<qrp::Document> to_documents(const RawCorpus& raw) {
    std::vector<qrp::Document> docs;
    for (const auto& [id, text] : raw) docs.push_back({id, text});
    return docs;
}

/// The consolidation payload for the reference library, as an LLM would
/// return it.
inline std::string reference_payload() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : qrp::reference_library().patterns) {
        nlohmann::json examples = nlohmann::json::array();
        for (const auto& e : p.examples) examples.push_back({{"query", e.query}, {"reformulation", e.reformulation}});
        arr.push_back({{"pattern name", p.name},
                       {"description", p.description},
                       {"transformation rule", p.rule},
                       {"examples", examples}});
    }
    return nlohmann::json{{"Consolidated Patterns", arr}}.dump();
}

}  // namespace testing_support
