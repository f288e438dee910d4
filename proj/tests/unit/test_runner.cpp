#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "mmarc/runner.hpp"
#include "support/synthetic.hpp"

using namespace mmarc;
namespace ts = mmarc::testsupport;
namespace fs = std::filesystem;

namespace {

RunManifest make_manifest(const DatasetSpec& spec, const PromptKit& kit, Backend& backend,
                          PipelineMode mode = PipelineMode::VlsrMssc) {
    RunManifest manifest;
    manifest.pipeline.mode = mode;
    manifest.pipeline.normalize();
    manifest.dataset = spec;
    manifest.templates_checksum = kit.templates().checksum();
    manifest.templates_dir = kit.templates().dir();
    manifest.backend_identity = backend.identity();
    manifest.started_at = now_rfc3339_utc();
    manifest.run_id = RunManifest::derive_run_id(manifest.core_json());
    return manifest;
}

}  // namespace

TEST_CASE("runner writes manifest, results, reports, status") {
    ts::TempDir dir("runner");
    auto tasks = ts::make_tasks(6, 21);
    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    ScriptedBackend backend(ts::make_responder(tasks));
    DatasetSpec spec;
    spec.path = "synthetic";
    RunManifest manifest = make_manifest(spec, kit, backend);

    Runner runner(tasks, backend, kit, manifest, dir.str(), 3);
    const RunOutcome outcome = runner.execute();

    CHECK(outcome.executed == 6);
    CHECK(outcome.skipped == 0);
    CHECK_FALSE(outcome.interrupted);
    REQUIRE(outcome.results.size() == 6);
    for (std::size_t i = 1; i < outcome.results.size(); ++i) {
        CHECK(outcome.results[i - 1].task_id < outcome.results[i].task_id);
    }
    for (const char* name : {"manifest.json", "results.jsonl", "report.json", "report.csv",
                             "report.md", "status.json"}) {
        CHECK(fs::exists(dir.path() / name));
    }
    const auto loaded = read_results_jsonl((dir.path() / "results.jsonl").string());
    CHECK(loaded.size() == 6);

    const std::string report = ts::read_file(dir.path() / "report.json");
    CHECK(report.find("\"tasks\": 6") != std::string::npos);
    CHECK(report.find(manifest.run_id) != std::string::npos);
}

TEST_CASE("identical runs in different directories are byte-identical") {
    auto tasks = ts::make_tasks(5, 22);
    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    DatasetSpec spec;
    spec.path = "synthetic";

    auto run_once = [&](const std::string& out_dir, int workers) {
        ScriptedBackend backend(ts::make_responder(tasks));
        RunManifest manifest = make_manifest(spec, kit, backend);
        Runner runner(tasks, backend, kit, manifest, out_dir, workers);
        (void)runner.execute();
    };

    ts::TempDir a("det_a");
    ts::TempDir b("det_b");
    run_once(a.str(), 1);
    run_once(b.str(), 4);  // different worker count, same artifacts

    CHECK(ts::read_file(a.path() / "results.jsonl") == ts::read_file(b.path() / "results.jsonl"));
    CHECK(ts::read_file(a.path() / "report.json") == ts::read_file(b.path() / "report.json"));
    CHECK(ts::read_file(a.path() / "report.csv") == ts::read_file(b.path() / "report.csv"));
    CHECK(ts::read_file(a.path() / "report.md") == ts::read_file(b.path() / "report.md"));
}

TEST_CASE("resume skips completed tasks") {
    ts::TempDir dir("resume");
    auto tasks = ts::make_tasks(6, 23);
    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    DatasetSpec spec;
    spec.path = "synthetic";

    // First pass: run only 2 tasks by handing the runner a truncated list.
    {
        ScriptedBackend backend(ts::make_responder(tasks));
        RunManifest manifest = make_manifest(spec, kit, backend);
        std::vector<Task> first_two(tasks.begin(), tasks.begin() + 2);
        Runner runner(first_two, backend, kit, manifest, dir.str(), 2);
        (void)runner.execute();
    }
    // Second pass: full list; the two finished ids must be skipped.
    {
        ScriptedBackend backend(ts::make_responder(tasks));
        RunManifest manifest = make_manifest(spec, kit, backend);
        Runner runner(tasks, backend, kit, manifest, dir.str(), 2);
        const RunOutcome outcome = runner.execute();
        CHECK(outcome.skipped == 2);
        CHECK(outcome.executed == 4);
        CHECK(outcome.results.size() == 6);
        CHECK(backend.call_count() == 4 * 3);  // only the remaining tasks hit the backend
    }
}

TEST_CASE("an out-dir holding a different run is rejected") {
    ts::TempDir dir("mismatch");
    auto tasks = ts::make_tasks(2, 24);
    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    DatasetSpec spec;
    spec.path = "synthetic";
    {
        ScriptedBackend backend(ts::make_responder(tasks));
        RunManifest manifest = make_manifest(spec, kit, backend);
        Runner runner(tasks, backend, kit, manifest, dir.str(), 1);
        (void)runner.execute();
    }
    {
        ScriptedBackend backend(ts::make_responder(tasks));
        RunManifest manifest = make_manifest(spec, kit, backend, PipelineMode::Baseline);
        Runner runner(tasks, backend, kit, manifest, dir.str(), 1);
        CHECK_THROWS_AS((void)runner.execute(), Error);
    }
}

TEST_CASE("interrupt flag preserves partial results") {
    ts::TempDir dir("interrupt");
    auto tasks = ts::make_tasks(4, 25);
    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    DatasetSpec spec;
    spec.path = "synthetic";
    ScriptedBackend backend(ts::make_responder(tasks));
    RunManifest manifest = make_manifest(spec, kit, backend);

    Runner::interrupt_flag().store(true);
    Runner runner(tasks, backend, kit, manifest, dir.str(), 1);
    const RunOutcome outcome = runner.execute();
    Runner::interrupt_flag().store(false);

    CHECK(outcome.interrupted);
    CHECK(outcome.executed == 0);
    CHECK(fs::exists(dir.path() / "manifest.json"));
    CHECK_FALSE(fs::exists(dir.path() / "report.json"));

    // Resuming afterwards completes the run.
    ScriptedBackend backend2(ts::make_responder(tasks));
    RunManifest manifest2 = make_manifest(spec, kit, backend2);
    Runner runner2(tasks, backend2, kit, manifest2, dir.str(), 2);
    const RunOutcome done = runner2.execute();
    CHECK_FALSE(done.interrupted);
    CHECK(done.results.size() == 4);
    CHECK(fs::exists(dir.path() / "report.json"));
}

TEST_CASE("score_run_dir reproduces the inline report") {
    ts::TempDir data("score_data");
    ts::TempDir out("score_out");
    auto tasks = ts::make_tasks(5, 26);
    ts::write_task_dir(data.path(), tasks);

    DatasetSpec spec;
    spec.source = DatasetSource::ArcEvalDir;
    spec.path = data.str();
    spec.seed = 3;
    const auto sampled = sample_tasks(spec, load_pool(spec));

    const PromptKit kit(TemplateSet::load(MMARC_TEMPLATE_DIR), RenderConfig{});
    ScriptedBackend backend(ts::make_responder(sampled));
    RunManifest manifest = make_manifest(spec, kit, backend);
    Runner runner(sampled, backend, kit, manifest, out.str(), 2);
    (void)runner.execute();

    const std::string inline_report = ts::read_file(out.path() / "report.json");
    const RunReport rescored = score_run_dir(out.str(), std::nullopt);
    CHECK(ts::read_file(out.path() / "report.json") == inline_report);
    CHECK(rescored.total == 5);
    CHECK(rescored.pass_at_1 == doctest::Approx(100.0));
}

TEST_CASE("report_from_json_file round trips emitters") {
    ts::TempDir dir("report_rt");
    auto tasks = ts::make_tasks(3, 27);
    std::vector<TaskResult> results;
    for (const Task& t : tasks) {
        TaskResult r;
        r.task_id = t.id;
        r.mode = PipelineMode::Baseline;
        TestAttempt attempt;
        attempt.test_index = 0;
        Round round;
        round.prediction = *t.tests[0].output;
        attempt.rounds.push_back(round);
        attempt.final_prediction = round.prediction;
        r.attempts.push_back(attempt);
        results.push_back(std::move(r));
    }
    const RunReport report = aggregate(results, tasks, "idXYZ", "baseline", "{\"a\":1}", 3, false);
    const std::string path = (dir.path() / "report.json").string();
    write_text_file(path, emit_report(report, ReportFormat::Json));

    const RunReport loaded = report_from_json_file(path);
    CHECK(emit_report(loaded, ReportFormat::Csv) == emit_report(report, ReportFormat::Csv));
    CHECK(emit_report(loaded, ReportFormat::Markdown) ==
          emit_report(report, ReportFormat::Markdown));
}
