#include "mmarc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

namespace mmarc {

using nlohmann::json;

const char* task_verdict_name(TaskVerdictKind kind) {
    switch (kind) {
        case TaskVerdictKind::Correct: return "correct";
        case TaskVerdictKind::Incorrect: return "incorrect";
        case TaskVerdictKind::Degraded: return "degraded";
        case TaskVerdictKind::Malformed: return "malformed";
    }
    return "unknown";
}

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

TaskScore score_task(const TaskResult& result, const Task& truth, int n_max) {
    if (result.task_id != truth.id) {
        throw Error(ErrorCode::CountMismatch,
                    "result " + result.task_id + " scored against task " + truth.id);
    }
    if (result.attempts.size() != truth.tests.size()) {
        throw Error(ErrorCode::CountMismatch,
                    "task " + truth.id + ": " + std::to_string(result.attempts.size()) +
                        " attempts for " + std::to_string(truth.tests.size()) + " test pairs");
    }
    TaskScore score;
    score.task_id = result.task_id;
    score.degraded = result.degraded;
    score.pairs_total = static_cast<int>(truth.tests.size());

    bool all_correct = true;
    for (std::size_t i = 0; i < truth.tests.size(); ++i) {
        if (!truth.tests[i].output) {
            throw Error(ErrorCode::MissingGroundTruth,
                        "task " + truth.id + " test pair " + std::to_string(i) +
                            " has no ground-truth output");
        }
        const TestAttempt& attempt = result.attempts[i];
        score.rounds_used = std::max(score.rounds_used, static_cast<int>(attempt.rounds.size()));
        const bool pair_ok = attempt.final_prediction &&
                             grids_equal(*attempt.final_prediction, *truth.tests[i].output);
        if (pair_ok) {
            ++score.pairs_correct;
        } else {
            all_correct = false;
        }
        if (!attempt.final_prediction) {
            score.missing_prediction = true;
        }
    }

    if (all_correct) {
        score.verdict = TaskVerdictKind::Correct;
    } else if (score.missing_prediction) {
        score.verdict = TaskVerdictKind::Malformed;
    } else if (score.degraded) {
        score.verdict = TaskVerdictKind::Degraded;
    } else {
        score.verdict = TaskVerdictKind::Incorrect;
    }

    // Snapshot r: the prediction each attempt would return if stopped after
    // round r (its last produced round when fewer exist).
    score.snapshot_correct.assign(static_cast<std::size_t>(std::max(n_max, 0)), false);
    for (int r = 1; r <= n_max; ++r) {
        bool snapshot_ok = true;
        for (std::size_t i = 0; i < truth.tests.size(); ++i) {
            const TestAttempt& attempt = result.attempts[i];
            if (attempt.rounds.empty()) {
                snapshot_ok = false;
                break;
            }
            const std::size_t idx =
                std::min<std::size_t>(static_cast<std::size_t>(r), attempt.rounds.size()) - 1;
            const auto& pred = attempt.rounds[idx].prediction;
            if (!pred || !grids_equal(*pred, *truth.tests[i].output)) {
                snapshot_ok = false;
                break;
            }
        }
        score.snapshot_correct[static_cast<std::size_t>(r - 1)] = snapshot_ok;
    }
    return score;
}

RunReport aggregate(const std::vector<TaskResult>& results, const std::vector<Task>& truths,
                    const std::string& run_id, const std::string& mode,
                    const std::string& config_echo_json, int n_max, bool self_correct) {
    if (results.size() != truths.size()) {
        throw Error(ErrorCode::CountMismatch, std::to_string(results.size()) + " results for " +
                                                  std::to_string(truths.size()) + " tasks");
    }
    std::map<std::string, const Task*> truth_by_id;
    for (const Task& t : truths) {
        if (!truth_by_id.emplace(t.id, &t).second) {
            throw Error(ErrorCode::CountMismatch, "duplicate truth task id " + t.id);
        }
    }

    RunReport report;
    report.run_id = run_id;
    report.mode = mode;
    report.config_echo_json = config_echo_json;
    report.self_correct = self_correct;
    report.n_max = self_correct ? n_max : 0;
    report.round_semantics_note =
        "Round r scores the prediction each task would return if stopped after round r "
        "(the last produced round when fewer exist); Base is the round-1 snapshot, i.e. the "
        "pre-correction prediction.";

    std::vector<int> snapshot_correct_counts(static_cast<std::size_t>(std::max(n_max, 0)), 0);
    std::map<std::string, bool> seen;
    for (const TaskResult& result : results) {
        auto it = truth_by_id.find(result.task_id);
        if (it == truth_by_id.end()) {
            throw Error(ErrorCode::CountMismatch, "no truth for result " + result.task_id);
        }
        if (!seen.emplace(result.task_id, true).second) {
            throw Error(ErrorCode::CountMismatch, "duplicate result for task " + result.task_id);
        }
        TaskScore score = score_task(result, *it->second, n_max);
        ++report.total;
        switch (score.verdict) {
            case TaskVerdictKind::Correct: ++report.correct; break;
            case TaskVerdictKind::Incorrect: ++report.clean_incorrect; break;
            case TaskVerdictKind::Degraded: ++report.degraded; break;
            case TaskVerdictKind::Malformed: ++report.malformed; break;
        }
        report.pairs_total += score.pairs_total;
        report.pairs_correct += score.pairs_correct;
        for (std::size_t r = 0; r < snapshot_correct_counts.size(); ++r) {
            if (score.snapshot_correct[r]) ++snapshot_correct_counts[r];
        }
        report.calls += result.calls;
        report.prompt_tokens += result.prompt_tokens;
        report.completion_tokens += result.completion_tokens;
        if (!result.usage_complete) report.usage_complete = false;
        report.per_task.push_back(std::move(score));
    }

    std::sort(report.per_task.begin(), report.per_task.end(),
              [](const TaskScore& a, const TaskScore& b) { return a.task_id < b.task_id; });

    report.pass_at_1 = report.total > 0 ? 100.0 * report.correct / report.total : 0.0;
    if (self_correct) {
        report.round_accuracy.resize(snapshot_correct_counts.size());
        for (std::size_t r = 0; r < snapshot_correct_counts.size(); ++r) {
            report.round_accuracy[r] =
                report.total > 0 ? 100.0 * snapshot_correct_counts[r] / report.total : 0.0;
        }
        report.base_accuracy = report.round_accuracy.empty() ? 0.0 : report.round_accuracy[0];
    }
    return report;
}

namespace {

json report_to_json(const RunReport& report) {
    json config = json::parse(report.config_echo_json.empty() ? "null" : report.config_echo_json,
                              nullptr, false);
    if (config.is_discarded()) config = nullptr;
    json out = {
        {"schema_version", RunReport::kSchemaVersion},
        {"run_id", report.run_id},
        {"mode", report.mode},
        {"config", std::move(config)},
        {"totals",
         {{"tasks", report.total},
          {"correct", report.correct},
          {"clean_incorrect", report.clean_incorrect},
          {"degraded", report.degraded},
          {"malformed", report.malformed}}},
        {"pass_at_1", report.pass_at_1},
        {"pass_at_1_display", format_percent(report.pass_at_1)},
        {"per_pair",
         {{"pairs_total", report.pairs_total},
          {"pairs_correct", report.pairs_correct},
          {"accuracy",
           report.pairs_total > 0 ? 100.0 * report.pairs_correct / report.pairs_total : 0.0}}},
        {"usage",
         {{"calls", report.calls},
          {"prompt_tokens", report.prompt_tokens},
          {"completion_tokens", report.completion_tokens},
          {"complete", report.usage_complete}}},
    };
    if (report.self_correct) {
        json rounds = json::array();
        for (double acc : report.round_accuracy) rounds.push_back(acc);
        out["rounds"] = {{"base", report.base_accuracy},
                         {"accuracy", std::move(rounds)},
                         {"semantics", report.round_semantics_note}};
    }
    json per_task = json::array();
    for (const TaskScore& score : report.per_task) {
        per_task.push_back({
            {"task_id", score.task_id},
            {"verdict", task_verdict_name(score.verdict)},
            {"pairs_total", score.pairs_total},
            {"pairs_correct", score.pairs_correct},
            {"rounds_used", score.rounds_used},
            {"degraded", score.degraded},
        });
    }
    out["per_task"] = std::move(per_task);
    return out;
}

std::string emit_csv(const RunReport& report) {
    std::string out = "task_id,verdict,pairs_total,pairs_correct,rounds_used,degraded\n";
    for (const TaskScore& score : report.per_task) {
        out += score.task_id;
        out += ',';
        out += task_verdict_name(score.verdict);
        out += ',';
        out += std::to_string(score.pairs_total);
        out += ',';
        out += std::to_string(score.pairs_correct);
        out += ',';
        out += std::to_string(score.rounds_used);
        out += ',';
        out += score.degraded ? "true" : "false";
        out += '\n';
    }
    return out;
}

std::string emit_markdown(const RunReport& report) {
    std::string out;
    out += "# Run report " + report.run_id + "\n\n";
    out += "Mode: " + report.mode + "  \n";
    out += "Tasks: " + std::to_string(report.total) + " (correct " + std::to_string(report.correct) +
           ", incorrect " + std::to_string(report.clean_incorrect) + ", degraded " +
           std::to_string(report.degraded) + ", malformed " + std::to_string(report.malformed) +
           ")\n\n";

    out += "| Run | Pass@1 |\n";
    out += "| --- | --- |\n";
    out += "| " + report.run_id + " (" + report.mode + ") | " + format_percent(report.pass_at_1) +
           " |\n";

    if (report.self_correct && !report.round_accuracy.empty()) {
        out += "\n" + report.round_semantics_note + "\n\n";
        out += "| Run | Base |";
        for (std::size_t r = 1; r <= report.round_accuracy.size(); ++r) {
            out += " R" + std::to_string(r) + " |";
        }
        out += "\n| --- | --- |";
        for (std::size_t r = 1; r <= report.round_accuracy.size(); ++r) out += " --- |";
        out += "\n| " + report.run_id + " | " + format_percent(report.base_accuracy) + " |";
        for (double acc : report.round_accuracy) {
            out += " " + format_percent(acc) + " |";
        }
        out += "\n";
    }
    return out;
}

}  // namespace

std::string emit_report(const RunReport& report, ReportFormat format) {
    switch (format) {
        case ReportFormat::Json: return report_to_json(report).dump(2) + "\n";
        case ReportFormat::Csv: return emit_csv(report);
        case ReportFormat::Markdown: return emit_markdown(report);
    }
    throw Error(ErrorCode::UsageError, "unknown report format");
}

}  // namespace mmarc
