#include <doctest.h>

#include <functional>

#include "fixtures.hpp"
#include "qrp/pipeline.hpp"
#include "support.hpp"

using namespace qrp;
using testing_support::read_file;
using testing_support::TempDir;

namespace {

std::map<std::string, std::vector<std::string>> rankings(const Run& run) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [qid, _] : run.by_query) out[qid] = run.ranked_doc_ids(qid);
    return out;
}

int code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return exit_code_for(e);
    }
    return 0;
}

}  // namespace

TEST_SUITE("cli_pipeline") {

TEST_CASE("bm25 mode on the two-document corpus") {
    TempDir dir;
    testing_support::write_file(dir / "c.tsv", "d1\tcat sat\nd2\tdog sat sat\n");
    testing_support::write_file(dir / "q.tsv", "q1\tsat\n");
    PipelineConfig cfg;
    cfg.corpus = dir / "c.tsv";
    cfg.queries = dir / "q.tsv";
    cfg.run_out = dir / "run.txt";
    const auto result = run_pipeline(cfg);
    const auto text = read_file(dir / "run.txt");
    const auto tag = "bm25-" + cfg.hash().substr(0, 8);
    CHECK(text == "q1 Q0 d2 1 0.233116 " + tag + "\nq1 Q0 d1 2 0.189503 " + tag + "\n");
    CHECK_FALSE(result.report.has_value());
    CHECK_FALSE(std::filesystem::exists(dir / "run.txt.metrics.csv"));
}

TEST_CASE("baseline modes write run and metrics") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    for (auto mode : {PipelineMode::bm25, PipelineMode::rm3, PipelineMode::rocchio}) {
        cfg.mode = mode;
        const auto result = run_pipeline(cfg);
        REQUIRE(result.report.has_value());
        CHECK(result.report->judged_queries == 5);
        CHECK(result.report->config_hash == cfg.hash());
        CHECK(read_file(result.report_path).find(cfg.hash()) != std::string::npos);
        CHECK(result.outputs.run_tag.starts_with(std::string(to_string(mode)) + "-"));
        CHECK(result.outputs.log.empty());
    }
}

TEST_CASE("reformer runs are byte-identical across executions") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}} habitat species");
    cfg.mode = PipelineMode::reformer;
    cfg.run_out = dir / "a.txt";
    const auto first = run_pipeline(cfg);
    cfg.run_out = dir / "b.txt";
    const auto second = run_pipeline(cfg);
    CHECK(read_file(dir / "a.txt") == read_file(dir / "b.txt"));
    CHECK(read_file(first.log_path) == read_file(second.log_path));
    CHECK(read_file(first.report_path) == read_file(second.report_path));
    CHECK_FALSE(read_file(dir / "a.txt").empty());
    // Every log line names its pattern and carries the config hash.
    const auto log = read_reformulation_log(first.log_path);
    REQUIRE(log.size() == 5);
    for (const auto& rec : log) {
        CHECK_FALSE(rec.pattern_name.empty());
        CHECK(rec.config_hash == cfg.hash());
        CHECK(rec.hybrid_query.ends_with("habitat species"));
    }

    // Sampling is also reproducible for a fixed seed.
    cfg.selection = SelectionMode::sample;
    cfg.seed = 11;
    cfg.run_out = dir / "c.txt";
    (void)run_pipeline(cfg);
    cfg.run_out = dir / "d.txt";
    (void)run_pipeline(cfg);
    CHECK(read_file(dir / "c.txt") == read_file(dir / "d.txt"));
}

TEST_CASE("identity reformulation ranks exactly like bm25") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    cfg.mode = PipelineMode::reformer;
    cfg.run_out = dir / "reformer.txt";
    const auto reformer = run_pipeline(cfg);
    cfg.mode = PipelineMode::bm25;
    cfg.run_out = dir / "bm25.txt";
    const auto bm25 = run_pipeline(cfg);
    CHECK(rankings(reformer.outputs.run) == rankings(bm25.outputs.run));
    CHECK(reformer.report->mean.ndcg == bm25.report->mean.ndcg);
}

TEST_CASE("repetition weights the original query") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "stock market");
    cfg.mode = PipelineMode::reformer;
    cfg.repetition = 5;
    const auto result = run_pipeline(cfg);
    CHECK(result.outputs.log[0].hybrid_query == "jaguar jaguar jaguar jaguar jaguar stock market");
}

TEST_CASE("prompted selector and augmentation hook") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}} cat");
    cfg.mode = PipelineMode::reformer_hook;
    cfg.selector = SelectorKind::llm;
    testing_support::write_file(dir / "hook.tsv", "q1\tx\nq2\tx\nq3\tx\nq4\tx\nq5\tx\n");
    cfg.hook_passages = dir / "hook.tsv";
    // The mock answers every call, selection prompts included, with the
    // template; an unknown pattern name makes selection fail.
    CHECK(code_of([&] { (void)run_pipeline(cfg); }) == 3);

    MockScript script;
    script.fallback = "Generalization";
    script.save(dir / "mock.json");
    cfg.selector = SelectorKind::llm;
    const auto result = run_pipeline(cfg);
    for (const auto& rec : result.outputs.log) CHECK(rec.pattern_name == "Generalization");

    testing_support::write_file(dir / "hook.tsv", "q1\tx\n");
    try {
        (void)run_pipeline(cfg);
        FAIL("missing hook passage accepted");
    } catch (const StageError& e) {
        CHECK(e.stage() == "hook");
        CHECK(e.exit_code() == 3);
    }
}

TEST_CASE("a failing stage leaves no output files") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    MockScript gap;  // no entries, no fallback
    gap.save(dir / "mock.json");
    cfg.mode = PipelineMode::reformer;
    try {
        (void)run_pipeline(cfg);
        FAIL("script gap not reported");
    } catch (const StageError& e) {
        CHECK(e.stage() == "generate");
        CHECK_FALSE(e.query_id().empty());
        CHECK(e.exit_code() == 4);
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
        const auto name = entry.path().filename().string();
        CHECK_FALSE(name.starts_with("run.txt"));
    }
}

TEST_CASE("configuration errors map to exit code 2") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    auto missing = cfg;
    missing.corpus = dir / "nope.tsv";
    CHECK(code_of([&] { (void)run_pipeline(missing); }) == 2);
    auto no_lib = cfg;
    no_lib.mode = PipelineMode::reformer;
    no_lib.library.clear();
    CHECK(code_of([&] { (void)run_pipeline(no_lib); }) == 2);
    auto bad_rep = cfg;
    bad_rep.repetition = 0;
    CHECK(code_of([&] { (void)run_pipeline(bad_rep); }) == 2);
    auto no_backend = cfg;
    no_backend.mode = PipelineMode::reformer;
    no_backend.gateway = GatewayConfig{};
    CHECK(code_of([&] { (void)run_pipeline(no_backend); }) == 2);
    CHECK(code_of([] { (void)parse_mode("bm26"); }) == 2);
    CHECK(parse_mode("reformer+hook") == PipelineMode::reformer_hook);
}

TEST_CASE("data errors map to exit code 3") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    testing_support::write_file(dir / "qrels.txt", "q1 0 p00\n");
    CHECK(code_of([&] { (void)run_pipeline(cfg); }) == 3);
    CHECK_FALSE(std::filesystem::exists(dir / "run.txt"));

    // Selector trained for another library.
    auto lib = read_library(cfg.library);
    lib.patterns.pop_back();
    lib.version = library_fingerprint(lib);
    write_library(lib, cfg.library);
    cfg.qrels.clear();
    cfg.mode = PipelineMode::reformer;
    CHECK(code_of([&] { (void)run_pipeline(cfg); }) == 3);
}

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(DataError("x")) == 3);
    CHECK(exit_code_for(ModelOutputError("x", "")) == 3);
    CHECK(exit_code_for(TransportError("x", {})) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
    CHECK(exit_code_for(StageError("s", "q", GatewayError("x"))) == 4);
}

TEST_CASE("config layering and hashing") {
    PipelineConfig cfg;
    const auto base = cfg.hash();
    CHECK(base.size() == 16);
    cfg.merge_json(nlohmann::json{{"k_context", 5}, {"rm3", {{"fb_terms", 20}}}, {"mode", "rm3"}});
    CHECK(cfg.k_context == 5);
    CHECK(cfg.rm3.fb_terms == 20);
    CHECK(cfg.rm3.fb_docs == 10);
    CHECK(cfg.mode == PipelineMode::rm3);
    CHECK(cfg.hash() != base);

    PipelineConfig a, b;
    b.threads = 8;
    b.gateway.max_in_flight = 1;
    b.run_out = "elsewhere.txt";
    CHECK(a.hash() == b.hash());
    CHECK_THROWS_AS(cfg.merge_json(nlohmann::json{{"k_eval", "many"}}), ConfigError);
    CHECK_THROWS_AS(cfg.merge_json(nlohmann::json{{"selector", "forest"}}), ConfigError);

    PipelineConfig round;
    round.merge_json(cfg.to_json());
    CHECK(round.hash() == cfg.hash());
}

TEST_CASE("binary index input gives the same run as TSV") {
    TempDir dir;
    auto cfg = fixtures::write_experiment(dir, "{{field:Query}}");
    const auto tsv = run_pipeline(cfg);
    open_corpus(cfg.corpus).save(dir / "index.bin");
    cfg.corpus = dir / "index.bin";
    cfg.run_out = dir / "run2.txt";
    const auto bin = run_pipeline(cfg);
    CHECK(tsv.outputs.run.by_query.size() == bin.outputs.run.by_query.size());
    CHECK(rankings(tsv.outputs.run) == rankings(bin.outputs.run));
}

}  // TEST_SUITE
