#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mmarc/backend.hpp"
#include "mmarc/extract.hpp"
#include "mmarc/prompt.hpp"

namespace mmarc {

enum class PipelineMode { Baseline, Vlsr, VlsrMssc, VlsrTosc, Ablation };
enum class Modality { Text, Vision };

const char* pipeline_mode_name(PipelineMode mode);
PipelineMode pipeline_mode_from_name(const std::string& name);
const char* modality_name(Modality m);

struct PipelineConfig {
    PipelineMode mode = PipelineMode::Vlsr;
    Modality sum_modality = Modality::Vision;
    Modality app_modality = Modality::Text;
    Modality verify_modality = Modality::Vision;
    int n_max = 3;
    double temperature = 0.7;
    int max_output_tokens = 8192;
    std::string model_id = "scripted";
    RenderConfig render;

    // Enforces the mode/modality couplings: vlsr-family modes summarize from
    // images and apply over text; mssc verifies visually, tosc textually.
    void normalize();
};

// One apply(+verify) attempt.
struct Round {
    std::optional<Grid> prediction;
    std::optional<Verdict> verdict;
    std::string verify_rationale;
};

// Rounds for a single test pair of a task.
struct TestAttempt {
    int test_index = 0;
    std::vector<Round> rounds;
    std::optional<Grid> final_prediction;
};

struct TaskResult {
    std::string task_id;
    PipelineMode mode = PipelineMode::Baseline;
    bool degraded = false;  // summarization failed; baseline fallback was used
    std::optional<std::string> rule;
    std::vector<TestAttempt> attempts;
    std::vector<std::string> digests;  // one per backend call, in call order
    // Per-stage sums of backend-reported latencies. Deterministic under
    // replay because the replay backend returns recorded latencies.
    std::map<std::string, std::int64_t> stage_latency_ms;
    std::int64_t calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool usage_complete = true;  // false when any response lacked usage
    std::optional<std::string> error;  // first stage failure, if any
};

nlohmann::json task_result_to_json(const TaskResult& r);
TaskResult task_result_from_json(const nlohmann::json& j);

// Stage operations. Each makes exactly one backend call (verify makes zero
// for an absent prediction) and records digest/latency into `result`.
std::string summarize_rule(const RedactedTask& task, Backend& backend, const PromptKit& kit,
                           Modality modality, const PipelineConfig& cfg, TaskResult& result);

std::optional<Grid> apply_rule(const RedactedTask& task, int test_index, int round,
                               const std::string& rule, Backend& backend, const PromptKit& kit,
                               Modality modality, const std::optional<Feedback>& feedback,
                               const PipelineConfig& cfg, TaskResult& result);

std::pair<Verdict, std::string> verify(const RedactedTask& task, int test_index, int round,
                                       const std::optional<Grid>& prediction, Backend& backend,
                                       const PromptKit& kit, Modality modality,
                                       const PipelineConfig& cfg, TaskResult& result);

// Mode dispatchers. Stage failures are recorded in the result, never thrown:
// a batch always yields one TaskResult per task.
TaskResult run_baseline(const Task& task, Backend& backend, const PromptKit& kit,
                        const PipelineConfig& cfg);
TaskResult run_vlsr(const Task& task, Backend& backend, const PromptKit& kit,
                    const PipelineConfig& cfg);
TaskResult run_selfcorrect(const Task& task, Backend& backend, const PromptKit& kit,
                           const PipelineConfig& cfg);
TaskResult run_ablation(const Task& task, Backend& backend, const PromptKit& kit,
                        const PipelineConfig& cfg);

TaskResult run_task(const Task& task, Backend& backend, const PromptKit& kit,
                    const PipelineConfig& cfg);

}  // namespace mmarc
