#include "mmarc/pipeline.hpp"

#include <nlohmann/json.hpp>

namespace mmarc {

using nlohmann::json;

const char* pipeline_mode_name(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::Baseline: return "baseline";
        case PipelineMode::Vlsr: return "vlsr";
        case PipelineMode::VlsrMssc: return "vlsr_mssc";
        case PipelineMode::VlsrTosc: return "vlsr_tosc";
        case PipelineMode::Ablation: return "ablation";
    }
    return "unknown";
}

PipelineMode pipeline_mode_from_name(const std::string& name) {
    if (name == "baseline") return PipelineMode::Baseline;
    if (name == "vlsr") return PipelineMode::Vlsr;
    if (name == "vlsr_mssc") return PipelineMode::VlsrMssc;
    if (name == "vlsr_tosc") return PipelineMode::VlsrTosc;
    if (name == "ablation") return PipelineMode::Ablation;
    throw Error(ErrorCode::UsageError, "unknown pipeline mode \"" + name + "\"");
}

const char* modality_name(Modality m) {
    return m == Modality::Text ? "text" : "vision";
}

void PipelineConfig::normalize() {
    if (n_max < 1) {
        throw Error(ErrorCode::ConfigError, "n_max must be >= 1");
    }
    if (temperature < 0) {
        throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
    }
    render.validate();
    switch (mode) {
        case PipelineMode::Baseline:
        case PipelineMode::Ablation:
            break;
        case PipelineMode::Vlsr:
        case PipelineMode::VlsrMssc:
        case PipelineMode::VlsrTosc:
            sum_modality = Modality::Vision;
            app_modality = Modality::Text;
            verify_modality = (mode == PipelineMode::VlsrTosc) ? Modality::Text : Modality::Vision;
            break;
    }
}

namespace {

std::string stage_tag(const std::string& task_id, int test_index, const std::string& stage,
                      int round) {
    std::string tag = task_id;
    if (test_index >= 0) {
        tag += "#" + std::to_string(test_index);
    }
    tag += "/" + stage + "/" + std::to_string(round);
    return tag;
}

ModelResponse call_stage(Backend& backend, const PipelineConfig& cfg, MessageSeq messages,
                         const std::string& tag, const std::string& stage, TaskResult& result) {
    ModelRequest req;
    req.model_id = cfg.model_id;
    req.messages = std::move(messages);
    req.temperature = cfg.temperature;
    req.max_output_tokens = cfg.max_output_tokens;
    req.request_tag = tag;
    const std::string digest = request_digest(req);
    ModelResponse resp = backend.complete(req);
    result.digests.push_back(digest);
    result.calls += 1;
    result.stage_latency_ms[stage] += resp.latency_ms;
    if (resp.usage) {
        result.prompt_tokens += resp.usage->prompt_tokens;
        result.completion_tokens += resp.usage->completion_tokens;
    } else {
        result.usage_complete = false;
    }
    return resp;
}

bool is_parse_failure(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoAnswerFound:
        case ErrorCode::Malformed:
        case ErrorCode::RaggedRows:
        case ErrorCode::ValueOutOfRange:
        case ErrorCode::SizeOutOfRange:
            return true;
        default:
            return false;
    }
}

}  // namespace

std::string summarize_rule(const RedactedTask& task, Backend& backend, const PromptKit& kit,
                           Modality modality, const PipelineConfig& cfg, TaskResult& result) {
    PromptInputs in;
    in.task = &task;
    const PromptFamily family = modality == Modality::Vision
                                    ? PromptFamily::RuleSummarizationVision
                                    : PromptFamily::RuleSummarizationText;
    MessageSeq messages = kit.build(family, in);
    ModelResponse resp =
        call_stage(backend, cfg, std::move(messages), stage_tag(task.id, -1, "summarize", 0),
                   "summarize", result);
    try {
        return parse_rule(resp.text);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyResponse) {
            throw Error(ErrorCode::SummarizationFailed, "task " + task.id + ": " + e.what());
        }
        throw;
    }
}

std::optional<Grid> apply_rule(const RedactedTask& task, int test_index, int round,
                               const std::string& rule, Backend& backend, const PromptKit& kit,
                               Modality modality, const std::optional<Feedback>& feedback,
                               const PipelineConfig& cfg, TaskResult& result) {
    PromptInputs in;
    in.task = &task;
    in.test_index = test_index;
    in.rule = rule;
    in.feedback = feedback;
    PromptFamily family;
    if (feedback) {
        family = PromptFamily::RefinementText;
    } else {
        family = modality == Modality::Text ? PromptFamily::RuleApplicationText
                                            : PromptFamily::RuleApplicationVision;
    }
    MessageSeq messages = kit.build(family, in);
    ModelResponse resp =
        call_stage(backend, cfg, std::move(messages), stage_tag(task.id, test_index, "apply", round),
                   "apply", result);
    try {
        return parse_matrix_answer(resp.text);
    } catch (const Error& e) {
        if (is_parse_failure(e.code())) {
            return std::nullopt;
        }
        throw;
    }
}

std::pair<Verdict, std::string> verify(const RedactedTask& task, int test_index, int round,
                                       const std::optional<Grid>& prediction, Backend& backend,
                                       const PromptKit& kit, Modality modality,
                                       const PipelineConfig& cfg, TaskResult& result) {
    if (!prediction) {
        // No backend call: nothing to show the critic.
        return {Verdict{VerdictValue::No, "", ParseQuality::Explicit}, "no parsable prediction"};
    }
    PromptInputs in;
    in.task = &task;
    in.test_index = test_index;
    in.prediction = prediction;
    const PromptFamily family = modality == Modality::Vision ? PromptFamily::VerificationVision
                                                             : PromptFamily::VerificationText;
    MessageSeq messages = kit.build(family, in);
    ModelResponse resp =
        call_stage(backend, cfg, std::move(messages), stage_tag(task.id, test_index, "verify", round),
                   "verify", result);
    return {parse_verdict(resp.text), resp.text};
}

namespace {

// Shared baseline flow; also the degraded fallback for summarize failures.
void baseline_into(const Task& task, Backend& backend, const PromptKit& kit,
                   const PipelineConfig& cfg, TaskResult& result) {
    const RedactedTask view = redact(task);
    for (int i = 0; i < static_cast<int>(view.test_inputs.size()); ++i) {
        TestAttempt attempt;
        attempt.test_index = i;
        Round round;
        try {
            PromptInputs in;
            in.task = &view;
            in.test_index = i;
            MessageSeq messages = kit.build(PromptFamily::TextBaseline, in);
            ModelResponse resp = call_stage(backend, cfg, std::move(messages),
                                            stage_tag(task.id, i, "baseline", 1), "baseline", result);
            try {
                round.prediction = parse_matrix_answer(resp.text);
            } catch (const Error& e) {
                if (!is_parse_failure(e.code())) throw;
            }
        } catch (const Error& e) {
            if (!result.error) result.error = e.what();
        }
        attempt.final_prediction = round.prediction;
        attempt.rounds.push_back(std::move(round));
        result.attempts.push_back(std::move(attempt));
    }
}

// Summarize-then-apply flow shared by vlsr and the ablation arms.
void summarize_apply_into(const Task& task, Backend& backend, const PromptKit& kit,
                          const PipelineConfig& cfg, Modality sum_modality, Modality app_modality,
                          TaskResult& result) {
    const RedactedTask view = redact(task);
    std::string rule;
    try {
        rule = summarize_rule(view, backend, kit, sum_modality, cfg, result);
    } catch (const Error& e) {
        result.degraded = true;
        result.error = e.what();
        baseline_into(task, backend, kit, cfg, result);
        return;
    }
    result.rule = rule;
    for (int i = 0; i < static_cast<int>(view.test_inputs.size()); ++i) {
        TestAttempt attempt;
        attempt.test_index = i;
        Round round;
        try {
            round.prediction = apply_rule(view, i, 1, rule, backend, kit, app_modality, std::nullopt,
                                          cfg, result);
        } catch (const Error& e) {
            if (!result.error) result.error = e.what();
        }
        attempt.final_prediction = round.prediction;
        attempt.rounds.push_back(std::move(round));
        result.attempts.push_back(std::move(attempt));
    }
}

}  // namespace

TaskResult run_baseline(const Task& task, Backend& backend, const PromptKit& kit,
                        const PipelineConfig& cfg) {
    TaskResult result;
    result.task_id = task.id;
    result.mode = cfg.mode;
    baseline_into(task, backend, kit, cfg, result);
    return result;
}

TaskResult run_vlsr(const Task& task, Backend& backend, const PromptKit& kit,
                    const PipelineConfig& cfg) {
    TaskResult result;
    result.task_id = task.id;
    result.mode = cfg.mode;
    summarize_apply_into(task, backend, kit, cfg, cfg.sum_modality, cfg.app_modality, result);
    return result;
}

TaskResult run_ablation(const Task& task, Backend& backend, const PromptKit& kit,
                        const PipelineConfig& cfg) {
    return run_vlsr(task, backend, kit, cfg);
}

TaskResult run_selfcorrect(const Task& task, Backend& backend, const PromptKit& kit,
                           const PipelineConfig& cfg) {
    TaskResult result;
    result.task_id = task.id;
    result.mode = cfg.mode;
    const RedactedTask view = redact(task);

    std::string rule;
    try {
        rule = summarize_rule(view, backend, kit, cfg.sum_modality, cfg, result);
    } catch (const Error& e) {
        result.degraded = true;
        result.error = e.what();
        baseline_into(task, backend, kit, cfg, result);
        return result;
    }
    result.rule = rule;

    for (int i = 0; i < static_cast<int>(view.test_inputs.size()); ++i) {
        TestAttempt attempt;
        attempt.test_index = i;
        std::optional<Feedback> feedback;
        for (int r = 1; r <= cfg.n_max; ++r) {
            Round round;
            try {
                round.prediction = apply_rule(view, i, r, rule, backend, kit, cfg.app_modality,
                                              feedback, cfg, result);
            } catch (const Error& e) {
                if (!result.error) result.error = e.what();
                attempt.rounds.push_back(std::move(round));
                break;
            }
            std::pair<Verdict, std::string> checked;
            try {
                checked = verify(view, i, r, round.prediction, backend, kit, cfg.verify_modality,
                                 cfg, result);
            } catch (const Error& e) {
                if (!result.error) result.error = e.what();
                attempt.rounds.push_back(std::move(round));
                break;
            }
            round.verdict = checked.first;
            round.verify_rationale = checked.second;
            const bool consistent = checked.first.value == VerdictValue::Yes;
            Feedback next;
            next.previous_prediction = round.prediction;
            next.critic_rationale = checked.second;
            next.round_index = r;
            attempt.rounds.push_back(std::move(round));
            if (consistent) break;
            feedback = std::move(next);
        }
        if (!attempt.rounds.empty()) {
            attempt.final_prediction = attempt.rounds.back().prediction;
        }
        result.attempts.push_back(std::move(attempt));
    }
    return result;
}

TaskResult run_task(const Task& task, Backend& backend, const PromptKit& kit,
                    const PipelineConfig& cfg) {
    switch (cfg.mode) {
        case PipelineMode::Baseline: return run_baseline(task, backend, kit, cfg);
        case PipelineMode::Vlsr: return run_vlsr(task, backend, kit, cfg);
        case PipelineMode::VlsrMssc:
        case PipelineMode::VlsrTosc: return run_selfcorrect(task, backend, kit, cfg);
        case PipelineMode::Ablation: return run_ablation(task, backend, kit, cfg);
    }
    throw Error(ErrorCode::ConfigError, "unhandled pipeline mode");
}

namespace {

json grid_to_json(const Grid& g) {
    json rows = json::array();
    for (int r = 0; r < g.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < g.cols(); ++c) row.push_back(static_cast<int>(g.at(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Grid grid_from_json_cells(const json& j) {
    std::vector<std::vector<int>> rows;
    for (const json& row : j) {
        std::vector<int> cells;
        for (const json& cell : row) cells.push_back(cell.get<int>());
        rows.push_back(std::move(cells));
    }
    return Grid::from_rows(rows);
}

}  // namespace

json task_result_to_json(const TaskResult& r) {
    json attempts = json::array();
    for (const TestAttempt& attempt : r.attempts) {
        json rounds = json::array();
        for (const Round& round : attempt.rounds) {
            json rj;
            rj["prediction"] = round.prediction ? grid_to_json(*round.prediction) : json(nullptr);
            if (round.verdict) {
                rj["verdict"] = {
                    {"value", round.verdict->value == VerdictValue::Yes ? "yes" : "no"},
                    {"quality",
                     round.verdict->quality == ParseQuality::Explicit ? "explicit" : "defaulted"},
                    {"raw", round.verdict->raw},
                };
            } else {
                rj["verdict"] = nullptr;
            }
            rj["rationale"] = round.verify_rationale;
            rounds.push_back(std::move(rj));
        }
        attempts.push_back({
            {"test_index", attempt.test_index},
            {"rounds", std::move(rounds)},
            {"final_prediction",
             attempt.final_prediction ? grid_to_json(*attempt.final_prediction) : json(nullptr)},
        });
    }
    json out = {
        {"task_id", r.task_id},
        {"mode", pipeline_mode_name(r.mode)},
        {"degraded", r.degraded},
        {"rule", r.rule ? json(*r.rule) : json(nullptr)},
        {"attempts", std::move(attempts)},
        {"digests", r.digests},
        {"stage_latency_ms", r.stage_latency_ms},
        {"calls", r.calls},
        {"prompt_tokens", r.prompt_tokens},
        {"completion_tokens", r.completion_tokens},
        {"usage_complete", r.usage_complete},
        {"error", r.error ? json(*r.error) : json(nullptr)},
    };
    return out;
}

TaskResult task_result_from_json(const json& j) {
    TaskResult r;
    r.task_id = j.at("task_id").get<std::string>();
    r.mode = pipeline_mode_from_name(j.at("mode").get<std::string>());
    r.degraded = j.value("degraded", false);
    if (j.contains("rule") && !j["rule"].is_null()) r.rule = j["rule"].get<std::string>();
    for (const json& aj : j.at("attempts")) {
        TestAttempt attempt;
        attempt.test_index = aj.at("test_index").get<int>();
        for (const json& rj : aj.at("rounds")) {
            Round round;
            if (!rj.at("prediction").is_null()) round.prediction = grid_from_json_cells(rj["prediction"]);
            if (!rj.at("verdict").is_null()) {
                Verdict v;
                v.value = rj["verdict"].at("value").get<std::string>() == "yes" ? VerdictValue::Yes
                                                                                : VerdictValue::No;
                v.quality = rj["verdict"].at("quality").get<std::string>() == "explicit"
                                ? ParseQuality::Explicit
                                : ParseQuality::Defaulted;
                v.raw = rj["verdict"].value("raw", "");
                round.verdict = v;
            }
            round.verify_rationale = rj.value("rationale", "");
            attempt.rounds.push_back(std::move(round));
        }
        if (!aj.at("final_prediction").is_null()) {
            attempt.final_prediction = grid_from_json_cells(aj["final_prediction"]);
        }
        r.attempts.push_back(std::move(attempt));
    }
    if (j.contains("digests")) r.digests = j["digests"].get<std::vector<std::string>>();
    if (j.contains("stage_latency_ms")) {
        for (auto it = j["stage_latency_ms"].begin(); it != j["stage_latency_ms"].end(); ++it) {
            r.stage_latency_ms[it.key()] = it.value().get<std::int64_t>();
        }
    }
    r.calls = j.value("calls", static_cast<std::int64_t>(0));
    r.prompt_tokens = j.value("prompt_tokens", static_cast<std::int64_t>(0));
    r.completion_tokens = j.value("completion_tokens", static_cast<std::int64_t>(0));
    r.usage_complete = j.value("usage_complete", true);
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
    return r;
}

}  // namespace mmarc
