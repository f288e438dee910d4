#include "mmarc/runner.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mmarc/digest.hpp"

namespace mmarc {

namespace fs = std::filesystem;
using nlohmann::json;

std::string now_rfc3339_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
    json palette = json::array();
    for (const auto& entry : cfg.render.palette.entries) {
        palette.push_back({{"name", entry.name},
                           {"rgb", {entry.color.r, entry.color.g, entry.color.b}}});
    }
    return json{
        {"mode", pipeline_mode_name(cfg.mode)},
        {"sum_modality", modality_name(cfg.sum_modality)},
        {"app_modality", modality_name(cfg.app_modality)},
        {"verify_modality", modality_name(cfg.verify_modality)},
        {"n_max", cfg.n_max},
        {"temperature", cfg.temperature},
        {"max_output_tokens", cfg.max_output_tokens},
        {"model_id", cfg.model_id},
        {"render",
         {{"cell_px", cfg.render.cell_px},
          {"line_px", cfg.render.line_px},
          {"outer_border", cfg.render.outer_border},
          {"palette", std::move(palette)}}},
    };
}

json dataset_spec_to_json(const DatasetSpec& spec) {
    return json{
        {"source", dataset_source_name(spec.source)},
        {"path", spec.path},
        {"sample_size", spec.sample_size ? json(*spec.sample_size) : json(nullptr)},
        {"seed", spec.seed},
    };
}

json RunManifest::core_json() const {
    return json{
        {"pipeline", pipeline_config_to_json(pipeline)},
        {"dataset", dataset_spec_to_json(dataset)},
        {"templates_checksum", templates_checksum},
        {"backend", backend_identity},
    };
}

std::string RunManifest::derive_run_id(const json& core) {
    return sha256_hex(core.dump()).substr(0, 12);
}

json RunManifest::to_json() const {
    json out = core_json();
    out["run_id"] = run_id;
    out["started_at"] = started_at;
    out["templates_dir"] = templates_dir;
    out["notes"] = notes;
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << content)) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
}

std::vector<TaskResult> read_results_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path);
    }
    std::vector<TaskResult> results;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            // A crash can truncate the final line; drop it and move on.
            std::cerr << "warning: skipping unparsable line " << line_no << " of " << path << "\n";
            continue;
        }
        results.push_back(task_result_from_json(j));
    }
    return results;
}

std::atomic<bool>& Runner::interrupt_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

Runner::Runner(std::vector<Task> tasks, Backend& backend, const PromptKit& kit,
               RunManifest manifest, std::string out_dir, int workers)
    : tasks_(std::move(tasks)),
      backend_(backend),
      kit_(kit),
      manifest_(std::move(manifest)),
      out_dir_(std::move(out_dir)),
      workers_(std::max(1, workers)) {}

RunOutcome Runner::execute() {
    fs::create_directories(out_dir_);
    const std::string manifest_path = (fs::path(out_dir_) / "manifest.json").string();
    const std::string results_path = (fs::path(out_dir_) / "results.jsonl").string();

    // The manifest is written before the first backend call and never
    // rewritten; a re-invocation must carry the identical configuration.
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        json existing = json::parse(in, nullptr, false);
        if (existing.is_discarded() || existing.value("run_id", "") != manifest_.run_id) {
            throw Error(ErrorCode::ConfigError,
                        out_dir_ + " already holds a run with a different configuration");
        }
    } else {
        write_text_file(manifest_path, manifest_.to_json().dump(2) + "\n");
    }

    std::vector<TaskResult> previous;
    std::vector<std::string> done_ids;
    if (fs::exists(results_path)) {
        previous = read_results_jsonl(results_path);
        for (const TaskResult& r : previous) done_ids.push_back(r.task_id);
    }
    std::sort(done_ids.begin(), done_ids.end());

    std::vector<const Task*> pending;
    for (const Task& t : tasks_) {
        if (!std::binary_search(done_ids.begin(), done_ids.end(), t.id)) {
            pending.push_back(&t);
        }
    }

    RunOutcome outcome;
    outcome.skipped = static_cast<int>(tasks_.size() - pending.size());

    std::ofstream append(results_path, std::ios::app);
    if (!append) {
        throw Error(ErrorCode::IoError, "cannot open " + results_path + " for append");
    }

    std::mutex io_mu;
    std::atomic<std::size_t> next{0};
    std::atomic<int> executed{0};
    std::vector<TaskResult> fresh;
    fresh.reserve(pending.size());
    std::vector<std::string> worker_errors;

    auto work = [&]() {
        while (!interrupt_flag().load()) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= pending.size()) break;
            const Task& task = *pending[idx];
            TaskResult result;
            try {
                result = run_task(task, backend_, kit_, manifest_.pipeline);
            } catch (const std::exception& e) {
                // run_task records stage errors itself; anything escaping is
                // an environment failure worth surfacing, not hiding.
                std::lock_guard<std::mutex> lock(io_mu);
                worker_errors.push_back(task.id + ": " + e.what());
                continue;
            }
            const std::string line = task_result_to_json(result).dump();
            std::lock_guard<std::mutex> lock(io_mu);
            append << line << '\n' << std::flush;
            fresh.push_back(std::move(result));
            const int n = ++executed;
            std::cerr << "[" << (outcome.skipped + n) << "/" << tasks_.size() << "] " << task.id
                      << (fresh.back().degraded ? " (degraded)" : "") << "\n";
        }
    };

    if (!pending.empty()) {
        std::vector<std::thread> threads;
        const int n_threads = std::min<int>(workers_, static_cast<int>(pending.size()));
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    append.close();

    if (!worker_errors.empty()) {
        throw Error(ErrorCode::TransportError,
                    "task execution failed: " + worker_errors.front() +
                        (worker_errors.size() > 1
                             ? " (+" + std::to_string(worker_errors.size() - 1) + " more)"
                             : ""));
    }

    outcome.executed = executed.load();
    outcome.interrupted = interrupt_flag().load() &&
                          (outcome.skipped + outcome.executed) < static_cast<int>(tasks_.size());

    outcome.results = std::move(previous);
    for (TaskResult& r : fresh) outcome.results.push_back(std::move(r));
    std::sort(outcome.results.begin(), outcome.results.end(),
              [](const TaskResult& a, const TaskResult& b) { return a.task_id < b.task_id; });

    json status = {
        {"run_id", manifest_.run_id},
        {"finished_at", now_rfc3339_utc()},
        {"executed", outcome.executed},
        {"skipped", outcome.skipped},
        {"interrupted", outcome.interrupted},
    };
    write_text_file((fs::path(out_dir_) / "status.json").string(), status.dump(2) + "\n");

    if (outcome.interrupted) {
        std::cerr << "interrupted; " << outcome.results.size() << "/" << tasks_.size()
                  << " results preserved. Re-run the same command to resume.\n";
        return outcome;
    }

    // Deterministic final order: rewrite sorted, atomically.
    {
        std::string all;
        for (const TaskResult& r : outcome.results) {
            all += task_result_to_json(r).dump();
            all += '\n';
        }
        const std::string tmp = results_path + ".tmp";
        write_text_file(tmp, all);
        fs::rename(tmp, results_path);
    }

    bool have_truth = true;
    for (const Task& t : tasks_) {
        for (const Pair& p : t.tests) {
            if (!p.output) {
                have_truth = false;
                break;
            }
        }
    }
    if (have_truth && outcome.results.size() == tasks_.size()) {
        const bool self_correct = manifest_.pipeline.mode == PipelineMode::VlsrMssc ||
                                  manifest_.pipeline.mode == PipelineMode::VlsrTosc;
        RunReport report =
            aggregate(outcome.results, tasks_, manifest_.run_id,
                      pipeline_mode_name(manifest_.pipeline.mode), manifest_.core_json().dump(),
                      manifest_.pipeline.n_max, self_correct);
        write_text_file((fs::path(out_dir_) / "report.json").string(),
                        emit_report(report, ReportFormat::Json));
        write_text_file((fs::path(out_dir_) / "report.csv").string(),
                        emit_report(report, ReportFormat::Csv));
        write_text_file((fs::path(out_dir_) / "report.md").string(),
                        emit_report(report, ReportFormat::Markdown));
    } else if (!have_truth) {
        std::cerr << "ground truth unavailable for some test pairs; reports not written\n";
    }
    return outcome;
}

namespace {

DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec spec;
    const std::string source = j.at("source").get<std::string>();
    if (source == "arc-eval-dir") {
        spec.source = DatasetSource::ArcEvalDir;
    } else if (source == "rearc-dir") {
        spec.source = DatasetSource::ReArcDir;
    } else if (source == "barc-file") {
        spec.source = DatasetSource::BarcFile;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown dataset source " + source);
    }
    spec.path = j.at("path").get<std::string>();
    if (j.contains("sample_size") && !j["sample_size"].is_null()) {
        spec.sample_size = j["sample_size"].get<std::size_t>();
    }
    spec.seed = j.at("seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

RunReport score_run_dir(const std::string& run_dir,
                        const std::optional<std::string>& dataset_override) {
    const fs::path dir(run_dir);
    std::ifstream min(dir / "manifest.json");
    if (!min) {
        throw Error(ErrorCode::IoError, "cannot read manifest.json in " + run_dir);
    }
    json manifest = json::parse(min, nullptr, false);
    if (manifest.is_discarded()) {
        throw Error(ErrorCode::ConfigError, "manifest.json in " + run_dir + " is not valid JSON");
    }

    DatasetSpec spec = dataset_spec_from_json(manifest.at("dataset"));
    if (dataset_override) spec.path = *dataset_override;
    std::vector<Task> truths = sample_tasks(spec, load_pool(spec));

    std::vector<TaskResult> results = read_results_jsonl((dir / "results.jsonl").string());

    const std::string mode = manifest.at("pipeline").at("mode").get<std::string>();
    const int n_max = manifest.at("pipeline").at("n_max").get<int>();
    const bool self_correct = (mode == "vlsr_mssc" || mode == "vlsr_tosc");
    json core = manifest;
    core.erase("run_id");
    core.erase("started_at");
    core.erase("templates_dir");
    core.erase("notes");
    RunReport report = aggregate(results, truths, manifest.value("run_id", ""), mode, core.dump(),
                                 n_max, self_correct);
    write_text_file((dir / "report.json").string(), emit_report(report, ReportFormat::Json));
    write_text_file((dir / "report.csv").string(), emit_report(report, ReportFormat::Csv));
    write_text_file((dir / "report.md").string(), emit_report(report, ReportFormat::Markdown));
    return report;
}

RunReport report_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path);
    }
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::ConfigError, path + " is not valid JSON");
    }
    RunReport report;
    report.run_id = j.value("run_id", "");
    report.mode = j.value("mode", "");
    if (j.contains("config") && !j["config"].is_null()) {
        report.config_echo_json = j["config"].dump();
    }
    const json& totals = j.at("totals");
    report.total = totals.value("tasks", 0);
    report.correct = totals.value("correct", 0);
    report.clean_incorrect = totals.value("clean_incorrect", 0);
    report.degraded = totals.value("degraded", 0);
    report.malformed = totals.value("malformed", 0);
    report.pass_at_1 = j.value("pass_at_1", 0.0);
    if (j.contains("per_pair")) {
        report.pairs_total = j["per_pair"].value("pairs_total", 0);
        report.pairs_correct = j["per_pair"].value("pairs_correct", 0);
    }
    if (j.contains("rounds")) {
        report.self_correct = true;
        report.base_accuracy = j["rounds"].value("base", 0.0);
        for (const json& acc : j["rounds"].at("accuracy")) {
            report.round_accuracy.push_back(acc.get<double>());
        }
        report.n_max = static_cast<int>(report.round_accuracy.size());
        report.round_semantics_note = j["rounds"].value("semantics", "");
    }
    if (j.contains("usage")) {
        report.calls = j["usage"].value("calls", static_cast<std::int64_t>(0));
        report.prompt_tokens = j["usage"].value("prompt_tokens", static_cast<std::int64_t>(0));
        report.completion_tokens = j["usage"].value("completion_tokens", static_cast<std::int64_t>(0));
        report.usage_complete = j["usage"].value("complete", true);
    }
    for (const json& tj : j.value("per_task", json::array())) {
        TaskScore score;
        score.task_id = tj.value("task_id", "");
        const std::string verdict = tj.value("verdict", "incorrect");
        if (verdict == "correct") {
            score.verdict = TaskVerdictKind::Correct;
        } else if (verdict == "degraded") {
            score.verdict = TaskVerdictKind::Degraded;
        } else if (verdict == "malformed") {
            score.verdict = TaskVerdictKind::Malformed;
        } else {
            score.verdict = TaskVerdictKind::Incorrect;
        }
        score.pairs_total = tj.value("pairs_total", 0);
        score.pairs_correct = tj.value("pairs_correct", 0);
        score.rounds_used = tj.value("rounds_used", 0);
        score.degraded = tj.value("degraded", false);
        report.per_task.push_back(std::move(score));
    }
    return report;
}

}  // namespace mmarc
