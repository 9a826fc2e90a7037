#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrp/error.hpp"
#include "qrp/gateway.hpp"
#include "qrp/patterns.hpp"

namespace qrp {

/// Consolidation produced more patterns than the library cap allows.
class PatternCapError : public DataError {
public:
    using DataError::DataError;
};

struct InductionOptions {
    std::size_t batch_size = 50;
    std::size_t max_patterns = kDefaultMaxPatterns;
    std::string source_dataset;
    std::string config_hash;
};

/// Every request/response exchanged during induction, in call order.
struct TranscriptRecord {
    std::size_t batch = 0;
    int attempt = 0;
    std::string fingerprint;
    nlohmann::json request;
    std::string response;
};

struct Transcript {
    std::vector<TranscriptRecord> records;
    void write_jsonl(const std::filesystem::path& path) const;
};

/// Appended to the user message when a consolidation reply is unusable.
extern const std::string_view kConsolidationFormatReminder;

/// The consolidation prompt: the batch's pairs (JSON array of
/// {query, reformulation}) plus the current library (JSON array, "[]" when
/// empty).
[[nodiscard]] ChatRequest build_induction_request(std::span<const TrainingPair> batch,
                                                  const PatternLibrary& current);

/// Finds the first balanced JSON object in `text` that has a
/// "Consolidated Patterns" key; surrounding prose is ignored.
[[nodiscard]] std::optional<nlohmann::json> extract_consolidated_payload(std::string_view text);

/// Turns a consolidation reply into a validated library. Throws
/// ModelOutputError when the reply has no usable payload or the patterns
/// violate library invariants, and PatternCapError when there are more
/// than `max_patterns`.
[[nodiscard]] PatternLibrary parse_consolidated_patterns(std::string_view text,
                                                         std::size_t max_patterns);

/// Iterative LLM consolidation over batches of pairs. Each batch sees the
/// library produced by the previous one. An unusable reply is re-asked once
/// with a format reminder; a second failure is fatal.
[[nodiscard]] PatternLibrary induce_patterns(std::span<const TrainingPair> pairs, Gateway& llm,
                                             const InductionOptions& options = {},
                                             const std::optional<PatternLibrary>& existing = {},
                                             Transcript* transcript = nullptr);

[[nodiscard]] ChatRequest build_label_request(const TrainingPair& pair, const PatternLibrary& library);

/// Maps a free-text reply to a pattern id, ignoring case, surrounding
/// quotes/markup, a leading "Pattern:" label and a trailing period.
[[nodiscard]] std::optional<int> resolve_pattern_name(std::string_view reply,
                                                      const PatternLibrary& library);

/// g(q, q̃): asks the LLM for one pattern name. A single-pattern library
/// short-circuits without a call. An unknown name is re-asked once; a
/// second miss throws ModelOutputError listing the valid names.
[[nodiscard]] PatternLabel label_pair(const TrainingPair& pair, const PatternLibrary& library,
                                      Gateway& llm);

/// Labels every pair (in input order) using up to `threads` concurrent
/// calls. Either every pair gets a label or a DataError reports each
/// failing pair.
[[nodiscard]] std::vector<PatternLabel> label_pairs(std::span<const TrainingPair> pairs,
                                                    const PatternLibrary& library, Gateway& llm,
                                                    std::size_t threads);

}  // namespace qrp
