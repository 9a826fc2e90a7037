#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qrp {

/// (q, q̃): an original query and a reformulation that retrieved better.
struct TrainingPair {
    std::string pair_id;
    std::string query;
    std::string reformulation;
    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct PatternExample {
    std::string query;
    std::string reformulation;
    friend bool operator==(const PatternExample&, const PatternExample&) = default;
};

struct ReformulationPattern {
    int pattern_id = 0;
    std::string name;
    std::string description;
    std::string rule;
    std::vector<PatternExample> examples;
    friend bool operator==(const ReformulationPattern&, const ReformulationPattern&) = default;
};

struct LibraryProvenance {
    std::string source_dataset;
    std::size_t num_pairs = 0;
    std::string induction_model;
    friend bool operator==(const LibraryProvenance&, const LibraryProvenance&) = default;
};

inline constexpr std::size_t kDefaultMaxPatterns = 16;

/// The consolidated pattern set. Ids are dense 0..M-1 and names are unique
/// (case-insensitively).
struct PatternLibrary {
    std::vector<ReformulationPattern> patterns;
    std::string version;
    LibraryProvenance provenance;
    std::string config_hash;

    [[nodiscard]] std::size_t size() const noexcept { return patterns.size(); }
    [[nodiscard]] std::optional<int> find(std::string_view name) const;
    [[nodiscard]] std::vector<std::string> names() const;

    /// Throws DataError unless 1 <= M <= max_patterns, ids are dense and
    /// names are non-empty and unique.
    void validate(std::size_t max_patterns = kDefaultMaxPatterns) const;

    friend bool operator==(const PatternLibrary&, const PatternLibrary&) = default;
};

struct PatternLabel {
    std::string pair_id;
    int pattern_id = 0;
    friend bool operator==(const PatternLabel&, const PatternLabel&) = default;
};

/// Lowercases ASCII and collapses whitespace; the key used for name lookup.
[[nodiscard]] std::string normalize_name(std::string_view name);

/// Content-derived version string ("lib-<hash>") over names, descriptions,
/// rules and examples.
[[nodiscard]] std::string library_fingerprint(const PatternLibrary& library);

[[nodiscard]] nlohmann::json to_json(const PatternLibrary& library);
[[nodiscard]] PatternLibrary library_from_json(const nlohmann::json& body);
[[nodiscard]] PatternLibrary read_library(const std::filesystem::path& path);
void write_library(const PatternLibrary& library, const std::filesystem::path& path);

/// The ten-pattern reference library shipped with the toolkit.
[[nodiscard]] PatternLibrary reference_library();

/// `pair_id<TAB>query<TAB>reformulation`. Rejects malformed lines (with the
/// line number), empty texts, query == reformulation, and duplicate ids.
[[nodiscard]] std::vector<TrainingPair> read_pairs_tsv(const std::filesystem::path& path);
inline std::vector<TrainingPair> ingest_pairs(const std::filesystem::path& path) {
    return read_pairs_tsv(path);
}

/// Seeded shuffle then prefix-take of n pairs (all pairs when n >= size).
[[nodiscard]] std::vector<TrainingPair> sample_pairs(std::vector<TrainingPair> pairs, std::size_t n,
                                                     std::uint64_t seed);

/// `pair_id<TAB>pattern_id`. Lines starting with '#' are comments; the
/// writer records the producing config hash in one.
[[nodiscard]] std::vector<PatternLabel> read_labels_tsv(const std::filesystem::path& path);
void write_labels_tsv(const std::vector<PatternLabel>& labels, const std::filesystem::path& path,
                      std::string_view config_hash = {});

}  // namespace qrp
