#include "qrp/patterns.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "qrp/corpus.hpp"
#include "qrp/error.hpp"
#include "qrp/hash.hpp"

namespace qrp {

using nlohmann::json;

std::string normalize_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (char c : name) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '_' || c == '-') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
    return out;
}

std::optional<int> PatternLibrary::find(std::string_view name) const {
    const auto key = normalize_name(name);
    for (const auto& p : patterns) {
        if (normalize_name(p.name) == key) return p.pattern_id;
    }
    return std::nullopt;
}

std::vector<std::string> PatternLibrary::names() const {
    std::vector<std::string> out;
    out.reserve(patterns.size());
    for (const auto& p : patterns) out.push_back(p.name);
    return out;
}

void PatternLibrary::validate(std::size_t max_patterns) const {
    if (patterns.empty()) throw DataError("pattern library is empty");
    if (patterns.size() > max_patterns) {
        throw DataError(fmt::format("pattern library has {} patterns, more than the cap of {}",
                                    patterns.size(), max_patterns));
    }
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        const auto& p = patterns[i];
        if (p.pattern_id != static_cast<int>(i)) {
            throw DataError(fmt::format("pattern '{}' has id {}, expected {}", p.name, p.pattern_id, i));
        }
        const auto key = normalize_name(p.name);
        if (key.empty()) throw DataError(fmt::format("pattern {} has an empty name", i));
        if (!seen.insert(key).second) throw DataError("duplicate pattern name '" + p.name + "'");
    }
}

std::string library_fingerprint(const PatternLibrary& library) {
    StableHasher h;
    for (const auto& p : library.patterns) {
        h.update(p.name).update("\x1f").update(p.description).update("\x1f").update(p.rule);
        for (const auto& ex : p.examples) {
            h.update("\x1f").update(ex.query).update("\x1d").update(ex.reformulation);
        }
        h.update("\x1e");
    }
    return "lib-" + to_hex(h.digest());
}

json to_json(const PatternLibrary& library) {
    json patterns = json::array();
    for (const auto& p : library.patterns) {
        json examples = json::array();
        for (const auto& ex : p.examples) {
            examples.push_back({{"query", ex.query}, {"reformulation", ex.reformulation}});
        }
        patterns.push_back({{"pattern_id", p.pattern_id},
                            {"name", p.name},
                            {"description", p.description},
                            {"rule", p.rule},
                            {"examples", std::move(examples)}});
    }
    json body = {{"version", library.version},
                 {"provenance",
                  {{"source_dataset", library.provenance.source_dataset},
                   {"num_pairs", library.provenance.num_pairs},
                   {"induction_model", library.provenance.induction_model}}},
                 {"patterns", std::move(patterns)}};
    if (!library.config_hash.empty()) body["config_hash"] = library.config_hash;
    return body;
}

PatternLibrary library_from_json(const json& body) {
    try {
        PatternLibrary library;
        library.version = body.value("version", std::string{});
        if (body.contains("provenance")) {
            const auto& prov = body.at("provenance");
            library.provenance.source_dataset = prov.value("source_dataset", std::string{});
            library.provenance.num_pairs = prov.value("num_pairs", std::size_t{0});
            library.provenance.induction_model = prov.value("induction_model", std::string{});
        }
        library.config_hash = body.value("config_hash", std::string{});
        for (const auto& p : body.at("patterns")) {
            ReformulationPattern pattern;
            pattern.pattern_id = p.at("pattern_id").get<int>();
            pattern.name = p.at("name").get<std::string>();
            pattern.description = p.value("description", std::string{});
            pattern.rule = p.value("rule", std::string{});
            if (p.contains("examples")) {
                for (const auto& ex : p.at("examples")) {
                    pattern.examples.push_back({ex.at("query").get<std::string>(),
                                                ex.at("reformulation").get<std::string>()});
                }
            }
            library.patterns.push_back(std::move(pattern));
        }
        library.validate(std::max(kDefaultMaxPatterns, library.patterns.size()));
        return library;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed pattern library: ") + e.what());
    }
}

PatternLibrary read_library(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pattern library " + path.string());
    try {
        return library_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_library(const PatternLibrary& library, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write pattern library " + path.string());
    out << to_json(library).dump(2) << '\n';
}

PatternLibrary reference_library() {
    struct Seed {
        const char* name;
        const char* description;
        const char* rule;
        PatternExample example;
    };
    static const Seed kSeeds[] = {
        {"Clarify Intent",
         "States the information need behind a terse query, such as a definition, a procedure, "
         "a cost or a comparison.",
         "Rewrite the query as an explicit request that names the kind of answer wanted.",
         {"ira rollover", "how to roll over a 401k into an ira"}},
        {"Clarify Subject",
         "Names the entity the query is about when it is implicit, abbreviated or generic.",
         "Replace pronouns, acronyms or generic nouns with the specific entity they refer to.",
         {"symptoms of ms", "symptoms of multiple sclerosis"}},
        {"Conceptual Shift",
         "Moves the query to a related concept that relevant documents are more likely to use.",
         "Substitute the literal concept with the neighbouring concept that carries the answer.",
         {"why do cats purr", "feline purring mechanism larynx"}},
        {"Contextual Expansion",
         "Adds related terms, synonyms or background context that relevant documents share.",
         "Append closely related vocabulary without changing the focus of the query.",
         {"solar panel output", "solar panel output watts energy production efficiency"}},
        {"Contextual Restriction",
         "Narrows a broad query to the sub-case that matches the likely intent.",
         "Add a qualifier that excludes off-topic readings of the query.",
         {"python install", "install python 3 on windows 10"}},
        {"Generalization",
         "Lifts an over-specific query to a broader formulation that has more matching text.",
         "Drop or abstract details that relevant documents are unlikely to repeat.",
         {"price of 2014 honda civic ex oil change at jiffy lube", "cost of honda civic oil change"}},
        {"Location Specification",
         "Adds or makes explicit the geographic scope of the need.",
         "Attach the country, region or city the query implicitly concerns.",
         {"average nurse salary", "average registered nurse salary in california"}},
        {"Purpose Specification",
         "Makes explicit what the searcher wants to do with the answer.",
         "Add the goal or use case that motivates the query.",
         {"baking soda", "baking soda uses for cleaning"}},
        {"Semantic Clarification",
         "Resolves an ambiguous word or phrase to its intended sense.",
         "Add a disambiguating term or replace the ambiguous word with an unambiguous one.",
         {"jaguar speed", "top running speed of a jaguar cat"}},
        {"Temporal Adjustment",
         "Adds or corrects the time frame the query refers to.",
         "Attach the date, period or recency constraint implied by the need.",
         {"minimum wage", "federal minimum wage 2020"}},
    };
    PatternLibrary library;
    int id = 0;
    for (const auto& s : kSeeds) {
        library.patterns.push_back({id++, s.name, s.description, s.rule, {s.example}});
    }
    library.provenance = {"reference", 0, "none"};
    library.version = library_fingerprint(library);
    return library;
}

std::vector<TrainingPair> read_pairs_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pairs file " + path.string());
    std::vector<TrainingPair> pairs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw DataError(path.string(), lineno,
                            fmt::format("expected 3 tab-separated fields, got {}", fields.size()));
        }
        TrainingPair pair{std::move(fields[0]), std::move(fields[1]), std::move(fields[2])};
        if (pair.pair_id.empty()) throw DataError(path.string(), lineno, "empty pair_id");
        if (pair.query.empty()) throw DataError(path.string(), lineno, "empty query");
        if (pair.reformulation.empty()) throw DataError(path.string(), lineno, "empty reformulation");
        if (pair.query == pair.reformulation) {
            throw DataError(path.string(), lineno, "reformulation is identical to the query");
        }
        if (!seen.insert(pair.pair_id).second) {
            throw DataError(path.string(), lineno, "duplicate pair_id '" + pair.pair_id + "'");
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<TrainingPair> sample_pairs(std::vector<TrainingPair> pairs, std::size_t n,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    if (n < pairs.size()) pairs.resize(n);
    return pairs;
}

std::vector<PatternLabel> read_labels_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open labels file " + path.string());
    std::vector<PatternLabel> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        const auto fields = split_tabs(line);
        int id = -1;
        if (fields.size() != 2 || fields[0].empty() ||
            std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), id).ec !=
                std::errc{} ||
            id < 0) {
            throw DataError(path.string(), lineno, "expected <pair_id><TAB><pattern_id>");
        }
        labels.push_back({fields[0], id});
    }
    return labels;
}

void write_labels_tsv(const std::vector<PatternLabel>& labels, const std::filesystem::path& path,
                      std::string_view config_hash) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write labels file " + path.string());
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    for (const auto& l : labels) out << l.pair_id << '\t' << l.pattern_id << '\n';
}

}  // namespace qrp
