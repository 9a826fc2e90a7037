#include <doctest.h>

#include "qrp/induction.hpp"
#include "support.hpp"

using namespace qrp;
using testing_support::TempDir;

namespace {

const std::vector<std::string> kReferenceNames = {
    "Clarify Intent",          "Clarify Subject", "Conceptual Shift",       "Contextual Expansion",
    "Contextual Restriction",  "Generalization",  "Location Specification", "Purpose Specification",
    "Semantic Clarification",  "Temporal Adjustment"};

Gateway mock_gateway(MockScript script, std::size_t in_flight = 4) {
    return Gateway(std::make_shared<MockBackend>(std::move(script)), {}, in_flight, "mock-model");
}

MockScript answer_always(std::string text) {
    MockScript s;
    s.fallback = std::move(text);
    return s;
}

std::vector<TrainingPair> make_pairs(std::size_t n) {
    std::vector<TrainingPair> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"p" + std::to_string(i), "query " + std::to_string(i), "better query " + std::to_string(i)});
    }
    return out;
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
    return out;
}


}  // namespace

TEST_SUITE("pattern_induction") {

TEST_CASE("reference library holds the ten canonical patterns") {
    const auto lib = reference_library();
    CHECK(lib.names() == kReferenceNames);
    CHECK_NOTHROW(lib.validate());
    for (std::size_t i = 0; i < lib.size(); ++i) {
        CHECK(lib.patterns[i].pattern_id == static_cast<int>(i));
        CHECK_FALSE(lib.patterns[i].description.empty());
        CHECK_FALSE(lib.patterns[i].rule.empty());
        CHECK_FALSE(lib.patterns[i].examples.empty());
    }
}

TEST_CASE("shipped reference library file matches the built-in library") {
    const auto lib = read_library(std::filesystem::path(QRP_TEST_DATA_DIR) / "reference_library.json");
    CHECK(lib.names() == kReferenceNames);
    CHECK(lib.patterns == reference_library().patterns);
}

TEST_CASE("induction with a scripted mock reproduces the reference names") {
    auto gw = mock_gateway(answer_always(testing_support::reference_payload()));
    Transcript transcript;
    const auto pairs = make_pairs(120);
    const auto lib = induce_patterns(pairs, gw, InductionOptions{50, 16, "train", "cfg"}, std::nullopt, &transcript);
    CHECK(lib.names() == kReferenceNames);
    CHECK(lib.provenance.num_pairs == 120);
    CHECK(lib.provenance.source_dataset == "train");
    CHECK(lib.provenance.induction_model == "mock-model");
    CHECK(lib.config_hash == "cfg");
    CHECK(lib.version == library_fingerprint(lib));
    REQUIRE(transcript.records.size() == 3);  // ceil(120 / 50) batches
    CHECK(transcript.records[2].batch == 2);

    // Bit-reproducible.
    auto gw2 = mock_gateway(answer_always(testing_support::reference_payload()));
    CHECK(induce_patterns(pairs, gw2, InductionOptions{50, 16, "train", "cfg"}) == lib);

    TempDir dir;
    transcript.write_jsonl(dir / "t.jsonl");
    const auto text = testing_support::read_file(dir / "t.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

TEST_CASE("first prompt renders an empty prior library") {
    const auto pairs = make_pairs(1);
    const auto req = build_induction_request(pairs, PatternLibrary{});
    const auto& user = req.messages.back().content;
    CHECK(user.find("Consolidated Patterns: []") != std::string::npos);
    CHECK(user.find("\"query 0\"") != std::string::npos);
    CHECK(user.find("{query_pairs}") == std::string::npos);
    CHECK(req.messages.front().role == Role::system);

    const auto with_prior = build_induction_request(pairs, reference_library()).messages.back().content;
    CHECK(with_prior.find("Temporal Adjustment") != std::string::npos);
}

TEST_CASE("later batches see the library from the previous batch") {
    // The second call is keyed by a prompt that embeds the first reply.
    const auto pairs = make_pairs(2);
    PatternLibrary first;
    first.patterns = {{0, "Alpha", "a", "r", {}}};
    const std::string first_reply = R"({"Consolidated Patterns": [{"pattern name": "Alpha", "description": "a", "transformation rule": "r", "examples": []}]})";
    const auto req1 = build_induction_request(std::span(pairs).subspan(0, 1), PatternLibrary{});
    const auto req2 = build_induction_request(std::span(pairs).subspan(1, 1), first);
    MockScript script;
    script.entries[fingerprint(req1)] = first_reply;
    script.entries[fingerprint(req2)] = testing_support::reference_payload();
    auto gw = mock_gateway(script);
    const auto lib = induce_patterns(pairs, gw, InductionOptions{1});
    CHECK(lib.names() == kReferenceNames);
}

TEST_CASE("payload extraction tolerates prose and key variants") {
    const std::string reply =
        "Sure! Here are the patterns {not json}\n```json\n"
        R"({"Consolidated Patterns": [{"Pattern Name": "Expand", "Description": "adds {context}", "Generalized Transformation Rule": "q -> q + c", "Representative Examples": ["a -> a b", {"original": "x", "reformulated": "x y"}]}]})"
        "\n```\nHope this helps.";
    const auto lib = parse_consolidated_patterns(reply, 16);
    REQUIRE(lib.size() == 1);
    CHECK(lib.patterns[0].name == "Expand");
    CHECK(lib.patterns[0].description == "adds {context}");
    CHECK(lib.patterns[0].rule == "q -> q + c");
    REQUIRE(lib.patterns[0].examples.size() == 2);
    CHECK(lib.patterns[0].examples[0] == PatternExample{"a", "a b"});
    CHECK(lib.patterns[0].examples[1] == PatternExample{"x", "x y"});
    CHECK_FALSE(extract_consolidated_payload("no json here").has_value());
    CHECK_FALSE(extract_consolidated_payload(R"({"other": 1})").has_value());
}

TEST_CASE("unusable reply is re-asked once") {
    const auto pairs = make_pairs(1);
    const auto req = build_induction_request(pairs, PatternLibrary{});
    auto retry = req;
    retry.messages.back().content += kConsolidationFormatReminder;
    MockScript script;
    script.entries[fingerprint(req)] = "I cannot do that.";
    script.entries[fingerprint(retry)] = testing_support::reference_payload();
    auto gw = mock_gateway(script);
    Transcript t;
    CHECK(induce_patterns(pairs, gw, {}, std::nullopt, &t).size() == 10);
    REQUIRE(t.records.size() == 2);
    CHECK(t.records[1].attempt == 1);
}

TEST_CASE("duplicate pattern names fail after the re-ask") {
    const std::string dup =
        R"({"Consolidated Patterns": [{"pattern name": "Same"}, {"pattern name": "same"}]})";
    auto gw = mock_gateway(answer_always(dup));
    Transcript t;
    try {
        (void)induce_patterns(make_pairs(3), gw, {}, std::nullopt, &t);
        FAIL("duplicates accepted");
    } catch (const ModelOutputError& e) {
        CHECK(e.raw() == dup);
    }
    CHECK(t.records.size() == 2);
}

TEST_CASE("too many patterns is a hard error") {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < 17; ++i) arr.push_back({{"pattern name", "P" + std::to_string(i)}});
    auto gw = mock_gateway(answer_always(nlohmann::json{{"Consolidated Patterns", arr}}.dump()));
    try {
        (void)induce_patterns(make_pairs(3), gw);
        FAIL("cap not enforced");
    } catch (const PatternCapError& e) {
        CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
    auto gw2 = mock_gateway(answer_always(nlohmann::json{{"Consolidated Patterns", arr}}.dump()));
    CHECK(induce_patterns(make_pairs(3), gw2, InductionOptions{50, 17}).size() == 17);
}

TEST_CASE("induction preconditions") {
    auto gw = mock_gateway(answer_always(testing_support::reference_payload()));
    CHECK_THROWS_AS((void)induce_patterns({}, gw), DataError);
    CHECK_THROWS_AS((void)induce_patterns(make_pairs(1), gw, InductionOptions{0}), ConfigError);
}

TEST_CASE("labeling resolves names case-insensitively") {
    const auto lib = reference_library();
    auto gw = mock_gateway(answer_always("clarify intent"));
    const auto label = label_pair({"p1", "q", "r"}, lib, gw);
    CHECK(label.pair_id == "p1");
    CHECK(label.pattern_id == *lib.find("Clarify Intent"));

    CHECK(resolve_pattern_name("**Temporal Adjustment**.", lib) == lib.find("Temporal Adjustment"));
    CHECK(resolve_pattern_name("Pattern: \"Generalization\"", lib) == lib.find("Generalization"));
    CHECK(resolve_pattern_name("  location   specification\nbecause...", lib) ==
          lib.find("Location Specification"));
    CHECK_FALSE(resolve_pattern_name("Unknown Strategy", lib).has_value());
}

TEST_CASE("single-pattern library labels without asking") {
    PatternLibrary one;
    one.patterns = {{0, "Only", "d", "r", {}}};
    MockScript empty;  // any call would be a script gap
    auto gw = mock_gateway(empty);
    CHECK(label_pair({"p", "q", "r"}, one, gw).pattern_id == 0);
}

TEST_CASE("unknown names fail after one re-ask and list valid names") {
    const auto lib = reference_library();
    auto gw = mock_gateway(answer_always("Unknown Strategy"));
    try {
        (void)label_pair({"p9", "q", "r"}, lib, gw);
        FAIL("unknown name accepted");
    } catch (const ModelOutputError& e) {
        const std::string msg = e.what();
        for (const auto& n : kReferenceNames) CHECK(msg.find(n) != std::string::npos);
        CHECK(e.raw() == "Unknown Strategy");
    }
}

TEST_CASE("label_pairs is total or reports every failing pair") {
    const auto lib = reference_library();
    const auto pairs = make_pairs(6);
    auto gw = mock_gateway(answer_always("Generalization"), 3);
    const auto labels = label_pairs(pairs, lib, gw, 3);
    REQUIRE(labels.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(labels[i].pair_id == pairs[i].pair_id);
        CHECK(labels[i].pattern_id == *lib.find("Generalization"));
    }
    CHECK(gw.peak_in_flight() <= 3);

    // Only pairs whose query mentions "5" get a bad answer.
    MockScript script;
    script.fallback = "Generalization";
    for (const auto& p : pairs) {
        if (p.query.find('5') == std::string::npos) continue;
        auto req = build_label_request(p, lib);
        script.entries[fingerprint(req)] = "nonsense";
        req.messages.back().content += "\n\n\"nonsense\" is not one of the listed patterns. Answer with exactly one of: " +
                                       join(lib.names()) + ".";
        script.entries[fingerprint(req)] = "nonsense";
    }
    auto gw2 = mock_gateway(script);
    try {
        (void)label_pairs(pairs, lib, gw2, 2);
        FAIL("partial labeling accepted");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("p5") != std::string::npos);
        CHECK(msg.find("p4") == std::string::npos);
    }
}

TEST_CASE("training pair ingestion") {
    TempDir dir;
    testing_support::write_file(dir / "pairs.tsv", "a\tq1\tr1\nb\tq2\tr2\n\nc\tq3\tr3\n");
    const auto pairs = ingest_pairs(dir / "pairs.tsv");
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == TrainingPair{"a", "q1", "r1"});
    CHECK(pairs[2].pair_id == "c");

    testing_support::write_file(dir / "empty.tsv", "a\tq1\tr1\nb\tq2\t\n");
    try {
        (void)read_pairs_tsv(dir / "empty.tsv");
        FAIL("empty reformulation accepted");
    } catch (const DataError& e) {
        CHECK(e.line() == 2);
    }
    testing_support::write_file(dir / "dup.tsv", "a\tq1\tr1\na\tq2\tr2\n");
    CHECK_THROWS_AS((void)read_pairs_tsv(dir / "dup.tsv"), DataError);
    testing_support::write_file(dir / "same.tsv", "a\tq\tq\n");
    CHECK_THROWS_AS((void)read_pairs_tsv(dir / "same.tsv"), DataError);
    testing_support::write_file(dir / "short.tsv", "a\tq\n");
    CHECK_THROWS_AS((void)read_pairs_tsv(dir / "short.tsv"), DataError);
}

TEST_CASE("seeded sampling is reproducible") {
    const auto pairs = make_pairs(20);
    const auto a = sample_pairs(pairs, 2, 7);
    CHECK(a.size() == 2);
    CHECK(a == sample_pairs(pairs, 2, 7));
    CHECK(sample_pairs(pairs, 50, 7).size() == 20);
    CHECK(sample_pairs(pairs, 10, 7) != sample_pairs(pairs, 10, 8));
}

TEST_CASE("library file round-trips losslessly") {
    TempDir dir;
    auto lib = reference_library();
    lib.provenance = {"msmarco-train", 10000, "some-model"};
    lib.config_hash = "abcd";
    lib.patterns[3].examples.push_back({"unicode ü \"quoted\"", "tab\tinside"});
    lib.version = library_fingerprint(lib);
    write_library(lib, dir / "lib.json");
    CHECK(read_library(dir / "lib.json") == lib);

    testing_support::write_file(dir / "bad.json", R"({"patterns": [{"pattern_id": 1, "name": "x"}]})");
    CHECK_THROWS_AS((void)read_library(dir / "bad.json"), DataError);
}

TEST_CASE("library invariants") {
    PatternLibrary lib;
    CHECK_THROWS_AS(lib.validate(), DataError);
    lib.patterns = {{0, "A", "", "", {}}, {1, "B", "", "", {}}};
    CHECK_NOTHROW(lib.validate());
    CHECK(lib.find("a") == 0);
    CHECK(lib.find(" b ") == 1);
    lib.patterns[1].pattern_id = 2;
    CHECK_THROWS_AS(lib.validate(), DataError);
    lib.patterns[1] = {1, "", "", "", {}};
    CHECK_THROWS_AS(lib.validate(), DataError);
    CHECK(normalize_name("Clarify_Intent") == normalize_name("clarify  intent"));
}

TEST_CASE("labels file round-trip") {
    TempDir dir;
    const std::vector<PatternLabel> labels = {{"a", 0}, {"b", 9}};
    write_labels_tsv(labels, dir / "l.tsv", "hash1");
    CHECK(testing_support::read_file(dir / "l.tsv").find("hash1") != std::string::npos);
    CHECK(read_labels_tsv(dir / "l.tsv") == labels);
}

}  // TEST_SUITE
