#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrp/gateway.hpp"
#include "qrp/inverted_index.hpp"
#include "qrp/patterns.hpp"

namespace qrp {

/// r = G(q, D_k(q), p).
struct Reformulation {
    std::string text;  // single line, never empty
    int pattern_id = 0;
    std::string query_id;
    std::string prompt_fingerprint;
    bool fallback = false;  // true when the LLM gave nothing usable and r = q
};

inline constexpr std::size_t kMaxRepetition = 5;

/// q* = q ⊕ r: the original query repeated `repetition` times, then r.
struct HybridQuery {
    std::string text;
    std::size_t repetition = 1;
};

/// Generation prompt. `extra_context` (the augmentation hook) is placed
/// ahead of the snippets; with no snippets and no extra context the context
/// block is left out entirely.
[[nodiscard]] ChatRequest build_generation_prompt(std::string_view query, const RetrievalContext& context,
                                                  const ReformulationPattern& pattern,
                                                  std::string_view extra_context = {});

/// Trims, collapses all whitespace runs (newlines included) to one space,
/// and strips surrounding quotes, backticks, code fences and emphasis
/// markers until the text is stable.
[[nodiscard]] std::string clean_reformulation(std::string_view raw);

/// Sends the prompt and cleans the reply. An empty reply is re-asked once;
/// a second empty reply falls back to r = q with `fallback` set.
[[nodiscard]] Reformulation generate_reformulation(Gateway& llm, std::string_view query_id,
                                                   std::string_view query, const RetrievalContext& context,
                                                   const ReformulationPattern& pattern,
                                                   std::string_view extra_context = {});

/// Throws std::invalid_argument unless 1 <= repetition <= kMaxRepetition.
[[nodiscard]] HybridQuery compose_hybrid(std::string_view query, std::string_view reformulation,
                                         std::size_t repetition = 1);

/// One line of the reformulation log.
struct ReformulationRecord {
    std::string query_id;
    int pattern_id = 0;
    std::string pattern_name;
    std::string reformulation;
    std::string hybrid_query;
    bool fallback = false;
    std::string config_hash;
};

[[nodiscard]] nlohmann::json to_json(const ReformulationRecord& record);
[[nodiscard]] ReformulationRecord reformulation_record_from_json(const nlohmann::json& body);
void write_reformulation_log(const std::vector<ReformulationRecord>& records,
                             const std::filesystem::path& path);
[[nodiscard]] std::vector<ReformulationRecord> read_reformulation_log(const std::filesystem::path& path);

}  // namespace qrp
