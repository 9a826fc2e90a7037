#include "qrp/generator.hpp"

#include <fstream>
#include <iostream>
#include <stdexcept>

#include <fmt/format.h>

#include "qrp/error.hpp"

namespace qrp {

using nlohmann::json;

namespace {

constexpr std::string_view kGenerationSystem =
    "You rewrite search queries. Rewrite the user's query by applying exactly the named "
    "reformulation pattern and nothing else. Output only the reformulated query, on one line, "
    "without quotes or explanation.";

constexpr std::string_view kEmptyReminder =
    "\n\nYour previous answer was empty. Output only the reformulated query.";

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

bool strip_pair(std::string& s, std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close)) {
        s = s.substr(open.size(), s.size() - open.size() - close.size());
        return true;
    }
    return false;
}

}  // namespace

ChatRequest build_generation_prompt(std::string_view query, const RetrievalContext& context,
                                    const ReformulationPattern& pattern, std::string_view extra_context) {
    std::string user = fmt::format("Pattern: {}\nDescription: {}\nRule: {}\n", pattern.name,
                                   pattern.description, pattern.rule);
    if (!pattern.examples.empty()) {
        const auto& ex = pattern.examples.front();
        user += fmt::format("Example: {} -> {}\n", ex.query, ex.reformulation);
    }
    user += fmt::format("\nQuery: {}\n", query);
    if (!extra_context.empty() || !context.entries.empty()) {
        user += "\nContext:\n";
        if (!extra_context.empty()) user += fmt::format("{}\n", collapse_whitespace(extra_context));
        for (std::size_t i = 0; i < context.entries.size(); ++i) {
            user += fmt::format("[{}] {}\n", i + 1, context.entries[i].snippet);
        }
    }
    user += "\nReformulated query:";
    ChatRequest request;
    request.messages = {{Role::system, std::string(kGenerationSystem)}, {Role::user, std::move(user)}};
    return request;
}

std::string clean_reformulation(std::string_view raw) {
    std::string_view body = raw;
    const auto first = body.find_first_not_of(" \t\r\n");
    body = first == std::string_view::npos ? std::string_view{} : body.substr(first);
    if (body.starts_with("```")) {
        // Fenced block: drop the opening fence line (and its language tag)
        // and the closing fence.
        const auto nl = body.find('\n');
        body = nl == std::string_view::npos ? body.substr(3) : body.substr(nl + 1);
        if (const auto close = body.rfind("```"); close != std::string_view::npos) body = body.substr(0, close);
    }
    std::string s = collapse_whitespace(body);
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        for (auto [open, close] : {std::pair<std::string_view, std::string_view>{"\"", "\""},
                                   {"'", "'"},
                                   {"`", "`"},
                                   {"**", "**"},
                                   {"*", "*"},
                                   {"\xE2\x80\x9C", "\xE2\x80\x9D"},
                                   {"\xE2\x80\x98", "\xE2\x80\x99"}}) {
            if (strip_pair(s, open, close)) {
                s = collapse_whitespace(s);
                changed = true;
                break;
            }
        }
    }
    return s;
}

Reformulation generate_reformulation(Gateway& llm, std::string_view query_id, std::string_view query,
                                     const RetrievalContext& context, const ReformulationPattern& pattern,
                                     std::string_view extra_context) {
    auto request = build_generation_prompt(query, context, pattern, extra_context);
    Reformulation out;
    out.pattern_id = pattern.pattern_id;
    out.query_id = std::string(query_id);
    out.prompt_fingerprint = fingerprint(request);
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) request.messages.back().content += kEmptyReminder;
        out.text = clean_reformulation(llm.complete(request).content);
        if (!out.text.empty()) return out;
    }
    std::clog << "warning: query " << query_id << ": empty reformulation twice, using the original query\n";
    out.text = collapse_whitespace(query);
    out.fallback = true;
    return out;
}

HybridQuery compose_hybrid(std::string_view query, std::string_view reformulation, std::size_t repetition) {
    if (repetition < 1 || repetition > kMaxRepetition) {
        throw std::invalid_argument(
            fmt::format("repetition must be between 1 and {}, got {}", kMaxRepetition, repetition));
    }
    const auto q = collapse_whitespace(query);
    const auto r = collapse_whitespace(reformulation);
    HybridQuery hybrid;
    hybrid.repetition = repetition;
    for (std::size_t i = 0; i < repetition; ++i) {
        if (!hybrid.text.empty() && !q.empty()) hybrid.text.push_back(' ');
        hybrid.text += q;
    }
    if (!r.empty()) {
        if (!hybrid.text.empty()) hybrid.text.push_back(' ');
        hybrid.text += r;
    }
    return hybrid;
}

json to_json(const ReformulationRecord& r) {
    json body = {{"query_id", r.query_id},         {"pattern_id", r.pattern_id},
                 {"pattern_name", r.pattern_name}, {"reformulation", r.reformulation},
                 {"hybrid_query", r.hybrid_query}, {"fallback", r.fallback}};
    if (!r.config_hash.empty()) body["config_hash"] = r.config_hash;
    return body;
}

ReformulationRecord reformulation_record_from_json(const json& body) {
    try {
        return {body.at("query_id").get<std::string>(),   body.at("pattern_id").get<int>(),
                body.at("pattern_name").get<std::string>(), body.at("reformulation").get<std::string>(),
                body.at("hybrid_query").get<std::string>(), body.at("fallback").get<bool>(),
                body.value("config_hash", std::string{})};
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed reformulation record: ") + e.what());
    }
}

void write_reformulation_log(const std::vector<ReformulationRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write reformulation log " + path.string());
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<ReformulationRecord> read_reformulation_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open reformulation log " + path.string());
    std::vector<ReformulationRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto body = json::parse(line, nullptr, false);
        if (body.is_discarded()) throw DataError(path.string(), lineno, "not a JSON object");
        records.push_back(reformulation_record_from_json(body));
    }
    return records;
}

}  // namespace qrp
