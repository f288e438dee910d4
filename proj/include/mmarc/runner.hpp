#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmarc/dataset.hpp"
#include "mmarc/eval.hpp"
#include "mmarc/pipeline.hpp"

namespace mmarc {

// Everything needed to reproduce a run. The manifest is written to the out
// directory before the first backend call and never rewritten; wall-clock
// completion data goes to a status sidecar instead.
struct RunManifest {
    std::string run_id;
    PipelineConfig pipeline;
    DatasetSpec dataset;
    std::string templates_checksum;
    std::string templates_dir;
    std::string backend_identity;
    std::string started_at;  // RFC3339, UTC
    std::vector<std::string> notes;

    // Canonical core (everything except started_at); run_id is derived from
    // it, so identical invocations share a run id.
    nlohmann::json core_json() const;
    nlohmann::json to_json() const;

    static std::string derive_run_id(const nlohmann::json& core);
};

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);

struct RunOutcome {
    std::vector<TaskResult> results;  // sorted by task id, resumed + new
    bool interrupted = false;
    int executed = 0;
    int skipped = 0;  // already present from a previous invocation
};

// Worker-pool executor. Writes manifest.json, appends results.jsonl as tasks
// complete (crash-safe), and on clean completion rewrites results.jsonl in
// task-id order and emits report.{json,csv,md} plus status.json. Re-invoking
// with the same out_dir and config resumes, skipping completed task ids.
class Runner {
  public:
    Runner(std::vector<Task> tasks, Backend& backend, const PromptKit& kit, RunManifest manifest,
           std::string out_dir, int workers);

    RunOutcome execute();

    // Cooperative interrupt: stops dispatching new tasks, drains in-flight.
    static std::atomic<bool>& interrupt_flag();

    const std::string& out_dir() const { return out_dir_; }

  private:
    std::vector<Task> tasks_;
    Backend& backend_;
    const PromptKit& kit_;
    RunManifest manifest_;
    std::string out_dir_;
    int workers_;
};

std::string now_rfc3339_utc();

// Reads a results.jsonl file (one TaskResult per line).
std::vector<TaskResult> read_results_jsonl(const std::string& path);

// Score a finished run directory: loads manifest + results, reconstructs the
// sampled truths from the recorded dataset spec, writes report files.
// Returns the report.
RunReport score_run_dir(const std::string& run_dir, const std::optional<std::string>& dataset_override);

// Reads a previously emitted report.json back into a RunReport (for format
// re-emission).
RunReport report_from_json_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mmarc
