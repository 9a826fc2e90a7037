#include "qrp/induction.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "qrp/parallel.hpp"

namespace qrp {

using nlohmann::json;

namespace {

constexpr std::string_view kInductionSystem =
    "You are QueryReformulationLLM, an intelligent assistant that identifies and updates abstract "
    "patterns that describe how queries are reformulated to improve retrieval effectiveness.";

constexpr std::string_view kInductionUser =
    "Given a set of query reformulation pairs below and optional prior list of consolidated "
    "patterns, your objectives are:\n"
    "1. Identify the transformation pattern(s) underlying each reformulation.\n"
    "2. Consolidate the global pattern set by merging semantically similar strategies and "
    "refining their names and descriptions.\n"
    "\n"
    "Query Reformulation Pairs: {query_pairs}\n"
    "\n"
    "Consolidated Patterns: {existing_patterns}\n"
    "\n"
    "Each extracted pattern should include a pattern name, an informative description, a "
    "generalized transformation rule, and representative examples.\n"
    "Return the results of consolidated patterns:\n"
    "\n"
    "{\"Consolidated Patterns\": [...]}";

constexpr std::string_view kLabelSystem =
    "You classify query reformulations. Given an original query, its reformulation and a list "
    "of reformulation patterns, answer with the name of the single pattern that best explains "
    "the change. Output only the pattern name.";

std::string replace_once(std::string text, std::string_view slot, std::string_view value) {
    const auto pos = text.find(slot);
    if (pos != std::string::npos) text.replace(pos, slot.size(), value);
    return text;
}

json patterns_block(const PatternLibrary& library) {
    json arr = json::array();
    for (const auto& p : library.patterns) {
        json examples = json::array();
        for (const auto& ex : p.examples) {
            examples.push_back({{"query", ex.query}, {"reformulation", ex.reformulation}});
        }
        arr.push_back({{"pattern name", p.name},
                       {"description", p.description},
                       {"transformation rule", p.rule},
                       {"examples", std::move(examples)}});
    }
    return arr;
}

// Lowercase alphanumerics only: "Pattern Name" and "pattern_name" match.
std::string key_of(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c >= 'A' && c <= 'Z') out.push_back(static_cast<char>(c - 'A' + 'a'));
        else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) out.push_back(c);
    }
    return out;
}

const json* find_key(const json& obj, std::initializer_list<std::string_view> candidates) {
    for (auto cand : candidates) {
        for (const auto& [k, v] : obj.items()) {
            if (key_of(k) == cand) return &v;
        }
    }
    return nullptr;
}

std::string as_text(const json* v) {
    if (v == nullptr || v->is_null()) return {};
    if (v->is_string()) return v->get<std::string>();
    return v->dump();
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

PatternExample parse_example(const json& ex) {
    if (ex.is_object()) {
        return {trim(as_text(find_key(ex, {"query", "original", "originalquery", "input", "before"}))),
                trim(as_text(find_key(ex, {"reformulation", "reformulated", "reformulatedquery",
                                           "rewrite", "output", "after"})))};
    }
    if (ex.is_array() && ex.size() == 2) {
        return {trim(as_text(&ex[0])), trim(as_text(&ex[1]))};
    }
    const auto text = as_text(&ex);
    for (std::string_view arrow : {"->", "\xE2\x86\x92", "=>"}) {
        if (const auto pos = text.find(arrow); pos != std::string::npos) {
            return {trim(std::string_view(text).substr(0, pos)),
                    trim(std::string_view(text).substr(pos + arrow.size()))};
        }
    }
    return {trim(text), {}};
}

}  // namespace

const std::string_view kConsolidationFormatReminder =
    "\n\nYour previous reply could not be used. Reply with only a JSON object of the form "
    "{\"Consolidated Patterns\": [{\"pattern name\": ..., \"description\": ..., "
    "\"transformation rule\": ..., \"examples\": [{\"query\": ..., \"reformulation\": ...}]}]} "
    "with unique pattern names.";

void Transcript::write_jsonl(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write transcript " + path.string());
    for (const auto& r : records) {
        out << json{{"batch", r.batch},
                    {"attempt", r.attempt},
                    {"fingerprint", r.fingerprint},
                    {"request", r.request},
                    {"response", r.response}}
                   .dump()
            << '\n';
    }
}

ChatRequest build_induction_request(std::span<const TrainingPair> batch,
                                    const PatternLibrary& current) {
    json pairs = json::array();
    for (const auto& p : batch) pairs.push_back({{"query", p.query}, {"reformulation", p.reformulation}});
    std::string user = replace_once(std::string(kInductionUser), "{query_pairs}", pairs.dump());
    user = replace_once(std::move(user), "{existing_patterns}", patterns_block(current).dump());
    ChatRequest request;
    request.messages = {{Role::system, std::string(kInductionSystem)}, {Role::user, std::move(user)}};
    return request;
}

std::optional<json> extract_consolidated_payload(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!parsed.is_discarded() && parsed.is_object() &&
                    parsed.contains("Consolidated Patterns")) {
                    return parsed;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

PatternLibrary parse_consolidated_patterns(std::string_view text, std::size_t max_patterns) {
    const auto payload = extract_consolidated_payload(text);
    if (!payload) {
        throw ModelOutputError("no {\"Consolidated Patterns\": [...]} object in reply", std::string(text));
    }
    const auto& list = (*payload)["Consolidated Patterns"];
    if (!list.is_array()) {
        throw ModelOutputError("\"Consolidated Patterns\" is not an array", std::string(text));
    }
    PatternLibrary library;
    for (const auto& item : list) {
        ReformulationPattern p;
        p.pattern_id = static_cast<int>(library.patterns.size());
        if (item.is_string()) {
            p.name = trim(item.get<std::string>());
        } else if (item.is_object()) {
            p.name = trim(as_text(find_key(item, {"patternname", "name", "pattern"})));
            p.description = trim(as_text(find_key(item, {"description", "informativedescription"})));
            p.rule = trim(as_text(find_key(
                item, {"generalizedtransformationrule", "transformationrule", "rule"})));
            if (const auto* ex = find_key(item, {"representativeexamples", "examples", "example"})) {
                if (ex->is_array()) {
                    for (const auto& e : *ex) p.examples.push_back(parse_example(e));
                } else {
                    p.examples.push_back(parse_example(*ex));
                }
            }
        } else {
            throw ModelOutputError("pattern entry is neither an object nor a string", std::string(text));
        }
        library.patterns.push_back(std::move(p));
    }
    if (library.patterns.size() > max_patterns) {
        throw PatternCapError(fmt::format(
            "consolidation produced {} patterns, above the cap of {}; lower --batch-size or raise "
            "--max-patterns",
            library.patterns.size(), max_patterns));
    }
    try {
        library.validate(max_patterns);
    } catch (const DataError& e) {
        throw ModelOutputError(e.what(), std::string(text));
    }
    return library;
}

PatternLibrary induce_patterns(std::span<const TrainingPair> pairs, Gateway& llm,
                               const InductionOptions& options,
                               const std::optional<PatternLibrary>& existing,
                               Transcript* transcript) {
    if (pairs.empty()) throw DataError("induce_patterns needs at least one training pair");
    if (options.batch_size == 0) throw ConfigError("batch_size must be >= 1");

    PatternLibrary working = existing.value_or(PatternLibrary{});
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < pairs.size(); start += options.batch_size, ++batch_index) {
        const auto batch = pairs.subspan(start, std::min(options.batch_size, pairs.size() - start));
        auto request = build_induction_request(batch, working);
        std::optional<PatternLibrary> next;
        for (int attempt = 0; attempt < 2 && !next; ++attempt) {
            if (attempt == 1) request.messages.back().content += kConsolidationFormatReminder;
            const auto response = llm.complete(request);
            if (transcript) {
                transcript->records.push_back(
                    {batch_index, attempt, fingerprint(request), to_json(request), response.content});
            }
            try {
                next = parse_consolidated_patterns(response.content, options.max_patterns);
            } catch (const PatternCapError&) {
                throw;
            } catch (const ModelOutputError& e) {
                if (attempt == 1) {
                    throw ModelOutputError(
                        fmt::format("batch {}: consolidation reply unusable after re-ask", batch_index),
                        e.raw());
                }
            }
        }
        working = std::move(*next);
    }

    working.provenance.source_dataset = options.source_dataset;
    working.provenance.num_pairs = pairs.size() + (existing ? existing->provenance.num_pairs : 0);
    working.provenance.induction_model = llm.default_model().empty() ? llm.backend().describe()
                                                                     : llm.default_model();
    working.config_hash = options.config_hash;
    working.version = library_fingerprint(working);
    return working;
}

ChatRequest build_label_request(const TrainingPair& pair, const PatternLibrary& library) {
    std::string user = "Patterns:\n";
    for (const auto& p : library.patterns) {
        user += fmt::format("- {}: {}\n", p.name, p.description);
    }
    user += fmt::format("\nOriginal query: {}\nReformulated query: {}\n\n", pair.query, pair.reformulation);
    user += "Which single pattern best explains the reformulation? Answer with the pattern name only.";
    ChatRequest request;
    request.messages = {{Role::system, std::string(kLabelSystem)}, {Role::user, std::move(user)}};
    return request;
}

std::optional<int> resolve_pattern_name(std::string_view reply, const PatternLibrary& library) {
    std::string text = trim(reply);
    if (const auto nl = text.find('\n'); nl != std::string::npos) text = trim(text.substr(0, nl));
    const auto strip_chars = std::string_view("\"'`*_[]<>. ");
    bool changed = true;
    while (changed && !text.empty()) {
        changed = false;
        if (normalize_name(text).starts_with("pattern:")) {
            text = trim(text.substr(text.find(':') + 1));
            changed = true;
        }
        while (!text.empty() && strip_chars.find(text.front()) != std::string_view::npos) {
            text.erase(0, 1);
            changed = true;
        }
        while (!text.empty() && strip_chars.find(text.back()) != std::string_view::npos) {
            text.pop_back();
            changed = true;
        }
    }
    return library.find(text);
}

PatternLabel label_pair(const TrainingPair& pair, const PatternLibrary& library, Gateway& llm) {
    if (library.patterns.empty()) throw DataError("cannot label against an empty library");
    if (library.patterns.size() == 1) return {pair.pair_id, library.patterns.front().pattern_id};

    auto request = build_label_request(pair, library);
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
        last = llm.complete(request).content;
        if (const auto id = resolve_pattern_name(last, library)) return {pair.pair_id, *id};
        if (attempt == 0) {
            request.messages.back().content +=
                fmt::format("\n\n\"{}\" is not one of the listed patterns. Answer with exactly one of: {}.",
                            trim(last), fmt::join(library.names(), ", "));
        }
    }
    throw ModelOutputError(fmt::format("pair {}: reply is not a pattern name; valid names: {}",
                                       pair.pair_id, fmt::join(library.names(), ", ")),
                           last);
}

std::vector<PatternLabel> label_pairs(std::span<const TrainingPair> pairs,
                                      const PatternLibrary& library, Gateway& llm,
                                      std::size_t threads) {
    std::vector<PatternLabel> labels(pairs.size());
    std::vector<std::string> errors(pairs.size());
    parallel_for(pairs.size(), threads, [&](std::size_t i) {
        try {
            labels[i] = label_pair(pairs[i], library, llm);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    std::string report;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (errors[i].empty()) continue;
        ++failures;
        report += fmt::format("\n  {}: {}", pairs[i].pair_id, errors[i]);
    }
    if (failures > 0) {
        throw DataError(fmt::format("labeling failed for {} of {} pairs:{}", failures, pairs.size(), report));
    }
    return labels;
}

}  // namespace qrp
