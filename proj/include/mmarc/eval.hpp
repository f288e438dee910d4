#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mmarc/pipeline.hpp"

namespace mmarc {

// Disjoint buckets. Correctness wins over pathology: a task solved through a
// degraded (fallback) path still counts as correct, so Pass@1 reflects real
// accuracy. Among failures, a missing prediction is malformed, a degraded
// pipeline path is degraded, anything else is clean incorrect.
enum class TaskVerdictKind { Correct, Incorrect, Degraded, Malformed };

const char* task_verdict_name(TaskVerdictKind kind);

struct TaskScore {
    std::string task_id;
    TaskVerdictKind verdict = TaskVerdictKind::Incorrect;
    int pairs_total = 0;
    int pairs_correct = 0;
    int rounds_used = 0;  // max across test pairs
    bool degraded = false;
    bool missing_prediction = false;
    // snapshot_correct[r-1]: would the task be correct if every attempt
    // stopped after round r (last produced round when fewer exist)?
    std::vector<bool> snapshot_correct;
};

// Exact-match scoring of one result against its ground truth. Throws
// MissingGroundTruth when the truth lacks a test output, CountMismatch when
// attempts do not line up with test pairs.
TaskScore score_task(const TaskResult& result, const Task& truth, int n_max);

struct RunReport {
    static constexpr int kSchemaVersion = 1;

    std::string run_id;
    std::string mode;
    std::string config_echo_json;  // canonical JSON text of the run config

    int total = 0;
    int correct = 0;
    int clean_incorrect = 0;
    int degraded = 0;
    int malformed = 0;
    double pass_at_1 = 0.0;

    int pairs_total = 0;
    int pairs_correct = 0;

    bool self_correct = false;
    int n_max = 0;
    std::vector<double> round_accuracy;  // R1..Rn snapshot accuracies
    double base_accuracy = 0.0;          // round-1 snapshot; equals R1 by construction

    std::int64_t calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool usage_complete = true;

    std::vector<TaskScore> per_task;  // sorted by task id

    std::string round_semantics_note;
};

// One result per task, matched to truths by id. Deterministic and
// permutation-invariant over input order.
RunReport aggregate(const std::vector<TaskResult>& results, const std::vector<Task>& truths,
                    const std::string& run_id, const std::string& mode,
                    const std::string& config_echo_json, int n_max, bool self_correct);

enum class ReportFormat { Json, Csv, Markdown };

std::string emit_report(const RunReport& report, ReportFormat format);

// Percentage with the paper's 2-decimal table precision.
std::string format_percent(double value);

}  // namespace mmarc
