#include "doctest.h"

#include <cstdlib>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "mmarc/runner.hpp"
#include "support/synthetic.hpp"

// End-to-end coverage of the installed binary. Each case shells out to the
// real CLI; stdout/stderr go to per-test log files in the temp dir.

using namespace mmarc;
namespace ts = mmarc::testsupport;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(MMARC_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int count_files(const fs::path& dir, const std::string& ext) {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ext) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("cli render writes 2K+1 images") {
    ts::TempDir dir("cli_render");
    Rng rng(41);
    const Task task = ts::make_task("rendered", rng, 3, 1);
    const fs::path task_file = dir.path() / "rendered.json";
    ts::write_file(task_file, ts::task_to_arc_json(task).dump());

    const fs::path out = dir.path() / "imgs";
    const int rc = run_cli("render --task " + task_file.string() + " --out " + out.string(),
                           dir.path() / "render.log");
    REQUIRE(rc == 0);
    CHECK(count_files(out, ".png") == 7);
    CHECK(fs::exists(out / "rendered_ex_in_0.png"));
    CHECK(fs::exists(out / "rendered_ex_out_2.png"));
    CHECK(fs::exists(out / "rendered_test_in_0.png"));
}

TEST_CASE("cli run, score, and report on a scripted baseline") {
    ts::TempDir dir("cli_run");
    auto tasks = ts::make_tasks(3, 42);
    const fs::path data = dir.path() / "tasks";
    ts::write_task_dir(data, tasks);

    // Scripted FIFO answers; single worker keeps dispatch order stable.
    json script = json::array();
    for (const Task& t : tasks) {
        script.push_back(ts::boxed_grid_reply(*t.tests[0].output));
    }
    const fs::path script_file = dir.path() / "script.json";
    ts::write_file(script_file, script.dump());

    const fs::path out = dir.path() / "out";
    int rc = run_cli("run --mode baseline --dataset " + data.string() +
                         " --dataset-kind arc-eval --backend scripted --script " +
                         script_file.string() + " --workers 1 --out-dir " + out.string(),
                     dir.path() / "run.log");
    REQUIRE(rc == 0);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(fs::exists(out / "results.jsonl"));
    const std::string report = ts::read_file(out / "report.json");
    CHECK(report.find("\"pass_at_1_display\": \"100.00\"") != std::string::npos);

    rc = run_cli("score --run-dir " + out.string(), dir.path() / "score.log");
    CHECK(rc == 0);

    rc = run_cli("report --report " + (out / "report.json").string() + " --format csv",
                 dir.path() / "report.log");
    CHECK(rc == 0);
    const std::string csv = ts::read_file(dir.path() / "report.log");
    CHECK(csv.rfind("task_id,verdict,", 0) == 0);
}

TEST_CASE("cli record then replay twice is byte-identical") {
    ts::TempDir dir("cli_replay");
    auto tasks = ts::make_tasks(4, 43);
    const fs::path data = dir.path() / "tasks";
    ts::write_task_dir(data, tasks);

    // Recording needs deterministic scripted replies. The self-correct mode
    // consumes summarize/apply/verify triples per task in dispatch order.
    json script = json::array();
    for (const Task& t : tasks) {
        script.push_back("\\boxed{Increase every cell value by one.}");
        script.push_back(ts::boxed_grid_reply(*t.tests[0].output));
        script.push_back("Matches. \\boxed{True}");
    }
    const fs::path script_file = dir.path() / "script.json";
    ts::write_file(script_file, script.dump());
    const fs::path transcript = dir.path() / "transcript.jsonl";

    const std::string common =
        " --mode vlsr_mssc --dataset " + data.string() +
        " --dataset-kind arc-eval --seed 9 --workers 1 --transcript " + transcript.string();

    int rc = run_cli("record" + common + " --backend scripted --script " + script_file.string() +
                         " --out-dir " + (dir.path() / "rec").string(),
                     dir.path() / "rec.log");
    REQUIRE(rc == 0);
    REQUIRE(fs::exists(transcript));

    rc = run_cli("replay" + common + " --out-dir " + (dir.path() / "rep1").string(),
                 dir.path() / "rep1.log");
    REQUIRE(rc == 0);
    rc = run_cli("replay" + common + " --out-dir " + (dir.path() / "rep2").string(),
                 dir.path() / "rep2.log");
    REQUIRE(rc == 0);

    for (const char* name : {"results.jsonl", "report.json", "report.csv", "report.md"}) {
        CHECK(ts::read_file(dir.path() / "rep1" / name) ==
              ts::read_file(dir.path() / "rep2" / name));
    }
    // Replay reproduces the recorded run's results too.
    CHECK(ts::read_file(dir.path() / "rep1" / "results.jsonl") ==
          ts::read_file(dir.path() / "rec" / "results.jsonl"));
}

TEST_CASE("cli ablate writes four arms and the combined table") {
    ts::TempDir dir("cli_ablate");
    auto tasks = ts::make_tasks(2, 44);
    const fs::path data = dir.path() / "tasks";
    ts::write_task_dir(data, tasks);

    // 4 arms x 2 tasks x 2 calls, in dispatch order.
    json script = json::array();
    for (int arm = 0; arm < 4; ++arm) {
        for (const Task& t : tasks) {
            script.push_back("\\boxed{Increase every cell value by one.}");
            script.push_back(ts::boxed_grid_reply(*t.tests[0].output));
        }
    }
    const fs::path script_file = dir.path() / "script.json";
    ts::write_file(script_file, script.dump());

    const fs::path out = dir.path() / "sweep";
    const int rc = run_cli("ablate --dataset " + data.string() +
                               " --dataset-kind arc-eval --seed 7 --workers 1" +
                               " --backend scripted --script " + script_file.string() +
                               " --out-dir " + out.string(),
                           dir.path() / "ablate.log");
    REQUIRE(rc == 0);

    int arm_results = 0;
    for (const char* arm : {"sum-text_app-text", "sum-vision_app-text", "sum-text_app-vision",
                            "sum-vision_app-vision"}) {
        if (fs::exists(out / arm / "results.jsonl")) ++arm_results;
    }
    CHECK(arm_results == 4);
    const std::string md = ts::read_file(out / "ablation.md");
    CHECK(md.find("| Run | Rule-Sum. text | Rule-Sum. vision | Rule-App. text | Rule-App. vision |") !=
          std::string::npos);
    CHECK(fs::exists(out / "ablation.json"));
}

TEST_CASE("cli exit codes") {
    ts::TempDir dir("cli_exit");
    // Unknown flag -> usage (1).
    CHECK(run_cli("run --nonsense", dir.path() / "e1.log") == 1);
    // Unknown mode -> usage (1).
    CHECK(run_cli("run --mode sideways --dataset /tmp --out-dir " + (dir.path() / "o").string(),
                  dir.path() / "e2.log") == 1);
    // Scripted backend without --script -> config (2).
    auto tasks = ts::make_tasks(1, 45);
    const fs::path data = dir.path() / "tasks";
    ts::write_task_dir(data, tasks);
    CHECK(run_cli("run --mode baseline --dataset " + data.string() + " --backend scripted" +
                      " --out-dir " + (dir.path() / "o2").string(),
                  dir.path() / "e3.log") == 2);
    // Missing dataset path -> data (4).
    CHECK(run_cli("run --mode baseline --dataset /definitely/not/here --backend scripted" +
                      std::string(" --script none.json --out-dir ") + (dir.path() / "o3").string(),
                  dir.path() / "e4.log") == 4);
    // Replay without a transcript file -> backend (3).
    CHECK(run_cli("replay --mode baseline --dataset " + data.string() +
                      " --transcript /missing.jsonl --out-dir " + (dir.path() / "o4").string(),
                  dir.path() / "e5.log") == 3);
}

TEST_CASE("cli config file merges under flags") {
    ts::TempDir dir("cli_config");
    auto tasks = ts::make_tasks(2, 46);
    const fs::path data = dir.path() / "tasks";
    ts::write_task_dir(data, tasks);
    json script = json::array();
    for (const Task& t : tasks) script.push_back(ts::boxed_grid_reply(*t.tests[0].output));
    ts::write_file(dir.path() / "script.json", script.dump());

    // JSON config supplies mode/backend/script; flags supply the rest.
    json config = {{"mode", "baseline"},
                   {"backend", "scripted"},
                   {"script", (dir.path() / "script.json").string()},
                   {"workers", 1}};
    ts::write_file(dir.path() / "conf.json", config.dump());

    const fs::path out = dir.path() / "out";
    int rc = run_cli("run --config " + (dir.path() / "conf.json").string() + " --dataset " +
                         data.string() + " --out-dir " + out.string(),
                     dir.path() / "cfg.log");
    REQUIRE(rc == 0);
    const std::string manifest = ts::read_file(out / "manifest.json");
    CHECK(manifest.find("\"mode\": \"baseline\"") != std::string::npos);

    // TOML config with a flag override: the flag wins.
    ts::write_file(dir.path() / "conf.toml",
                   "mode = \"vlsr\"\nbackend = \"scripted\"\nscript = \"" +
                       (dir.path() / "script.json").string() + "\"\nworkers = 1\n");
    const fs::path out2 = dir.path() / "out2";
    rc = run_cli("run --config " + (dir.path() / "conf.toml").string() + " --mode baseline" +
                     " --dataset " + data.string() + " --out-dir " + out2.string(),
                 dir.path() / "cfg2.log");
    REQUIRE(rc == 0);
    CHECK(ts::read_file(out2 / "manifest.json").find("\"mode\": \"baseline\"") !=
          std::string::npos);
}
