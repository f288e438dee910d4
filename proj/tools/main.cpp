// mmarc: multimodal reasoning harness for ARC-style grid puzzles.
//
// Subcommands: run, ablate, render, score, report, record, replay.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "mmarc/backend.hpp"
#include "mmarc/dataset.hpp"
#include "mmarc/eval.hpp"
#include "mmarc/pipeline.hpp"
#include "mmarc/prompt.hpp"
#include "mmarc/remote.hpp"
#include "mmarc/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmarc;

#ifndef MMARC_DEFAULT_TEMPLATE_DIR
#define MMARC_DEFAULT_TEMPLATE_DIR "assets/templates"
#endif

namespace {

// Accepts the stock TOML-style config plus flat JSON objects.
class JsonOrTomlConfig : public CLI::ConfigBase {
  public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::streampos start = input.tellg();
        char first = 0;
        input >> std::ws;
        first = static_cast<char>(input.peek());
        input.seekg(start);
        if (first != '{') {
            return CLI::ConfigBase::from_config(input);
        }
        json doc = json::parse(input, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw CLI::FileError("config file is not a valid JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            CLI::ConfigItem item;
            item.name = it.key();
            const json& v = it.value();
            if (v.is_string()) {
                item.inputs.push_back(v.get<std::string>());
            } else if (v.is_boolean()) {
                item.inputs.push_back(v.get<bool>() ? "true" : "false");
            } else {
                item.inputs.push_back(v.dump());
            }
            items.push_back(std::move(item));
        }
        return items;
    }
};

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::UsageError:
            return 1;
        case ErrorCode::ConfigError:
        case ErrorCode::MissingArgument:
            return 2;
        case ErrorCode::AuthError:
        case ErrorCode::RateLimited:
        case ErrorCode::TransportError:
        case ErrorCode::ProviderSchemaError:
        case ErrorCode::ReplayMiss:
        case ErrorCode::StorageError:
            return 3;
        default:
            return 4;
    }
}

void handle_sigint(int) {
    Runner::interrupt_flag().store(true);
}

struct RunArgs {
    std::string mode = "vlsr";
    std::string dataset;
    std::string dataset_kind = "auto";
    std::int64_t sample_size = -1;  // -1 = all
    std::uint64_t seed = 0;
    std::string backend = "scripted";
    std::string endpoint;
    std::string model = "scripted";
    std::string api_key_env;
    bool no_auth = false;
    double temperature = 0.7;
    int n_max = 3;
    int max_output_tokens = 8192;
    int workers = 4;
    std::string out_dir;
    std::string transcript;
    bool record = false;
    std::string script;
    std::string templates;
    int cell_px = 30;
    int line_px = 2;
    std::string sum_modality = "vision";
    std::string app_modality = "text";
};

void add_run_options(CLI::App* cmd, RunArgs& args, bool with_mode) {
    if (with_mode) {
        cmd->add_option("--mode", args.mode,
                        "pipeline mode: baseline | vlsr | vlsr_mssc | vlsr_tosc | ablation")
            ->capture_default_str();
        cmd->add_option("--sum-modality", args.sum_modality,
                        "rule-summarization modality for --mode ablation: text | vision");
        cmd->add_option("--app-modality", args.app_modality,
                        "rule-application modality for --mode ablation: text | vision");
    }
    cmd->add_option("--dataset", args.dataset, "task directory or file")->required();
    cmd->add_option("--dataset-kind", args.dataset_kind,
                    "arc-eval | rearc | barc | auto (dir=arc-eval, file=barc)")
        ->capture_default_str();
    cmd->add_option("--sample-size", args.sample_size, "tasks to sample (-1 = all)")
        ->capture_default_str();
    cmd->add_option("--seed", args.seed, "sampling seed")->capture_default_str();
    cmd->add_option("--backend", args.backend, "remote | scripted | replay")->capture_default_str();
    cmd->add_option("--endpoint", args.endpoint, "chat-completions base URL (remote backend)");
    cmd->add_option("--model", args.model, "model id sent with every request")
        ->capture_default_str();
    cmd->add_option("--api-key-env", args.api_key_env,
                    "env var holding the API key (default MMARC_API_KEY, then OPENAI_API_KEY)");
    cmd->add_flag("--no-auth", args.no_auth, "allow a remote endpoint without an API key");
    cmd->add_option("--temperature", args.temperature, "sampling temperature")
        ->capture_default_str();
    cmd->add_option("--n-max", args.n_max, "self-correction round limit")->capture_default_str();
    cmd->add_option("--max-output-tokens", args.max_output_tokens, "per-call completion budget")
        ->capture_default_str();
    cmd->add_option("--workers", args.workers, "concurrent task workers")->capture_default_str();
    cmd->add_option("--out-dir", args.out_dir, "artifact directory")->required();
    cmd->add_option("--transcript", args.transcript, "transcript JSONL (replay source / record sink)");
    cmd->add_flag("--record", args.record, "record every call to --transcript while running");
    cmd->add_option("--script", args.script, "JSON array of canned replies (scripted backend)");
    cmd->add_option("--templates", args.templates, "prompt template directory");
    cmd->add_option("--cell-px", args.cell_px, "rendered cell size in pixels")->capture_default_str();
    cmd->add_option("--line-px", args.line_px, "divider thickness in pixels")->capture_default_str();
    cmd->set_config("--config", "", "JSON or TOML config file merged under flags");
    cmd->config_formatter(std::make_shared<JsonOrTomlConfig>());
}

std::string resolve_templates_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("MMARC_TEMPLATES"); env != nullptr && *env != '\0') {
        return env;
    }
    return MMARC_DEFAULT_TEMPLATE_DIR;
}

DatasetSpec make_dataset_spec(const RunArgs& args) {
    DatasetSpec spec;
    spec.path = args.dataset;
    spec.seed = args.seed;
    if (args.sample_size >= 0) spec.sample_size = static_cast<std::size_t>(args.sample_size);
    std::string kind = args.dataset_kind;
    if (kind == "auto") {
        kind = fs::is_directory(args.dataset) ? "arc-eval" : "barc";
    }
    if (kind == "arc-eval") {
        spec.source = DatasetSource::ArcEvalDir;
    } else if (kind == "rearc") {
        spec.source = DatasetSource::ReArcDir;
    } else if (kind == "barc") {
        spec.source = DatasetSource::BarcFile;
    } else {
        throw Error(ErrorCode::UsageError, "unknown dataset kind \"" + kind + "\"");
    }
    return spec;
}

Modality modality_from_name(const std::string& name) {
    if (name == "text") return Modality::Text;
    if (name == "vision") return Modality::Vision;
    throw Error(ErrorCode::UsageError, "unknown modality \"" + name + "\" (text | vision)");
}

PipelineConfig make_pipeline_config(const RunArgs& args, PipelineMode mode) {
    PipelineConfig cfg;
    cfg.mode = mode;
    cfg.sum_modality = modality_from_name(args.sum_modality);
    cfg.app_modality = modality_from_name(args.app_modality);
    cfg.n_max = args.n_max;
    cfg.temperature = args.temperature;
    cfg.max_output_tokens = args.max_output_tokens;
    cfg.model_id = args.model;
    cfg.render.cell_px = args.cell_px;
    cfg.render.line_px = args.line_px;
    cfg.normalize();
    return cfg;
}

std::vector<std::string> load_script_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot read script file " + path);
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw Error(ErrorCode::ConfigError, "script file must hold a JSON array of strings");
    }
    std::vector<std::string> replies;
    for (const json& item : doc) {
        if (!item.is_string()) {
            throw Error(ErrorCode::ConfigError, "script file must hold a JSON array of strings");
        }
        replies.push_back(item.get<std::string>());
    }
    return replies;
}

std::string resolve_api_key(const RunArgs& args) {
    std::vector<std::string> candidates;
    if (!args.api_key_env.empty()) {
        candidates.push_back(args.api_key_env);
    } else {
        candidates = {"MMARC_API_KEY", "OPENAI_API_KEY"};
    }
    for (const std::string& name : candidates) {
        if (const char* value = std::getenv(name.c_str()); value != nullptr && *value != '\0') {
            return value;
        }
    }
    if (args.no_auth) return "";
    throw Error(ErrorCode::ConfigError,
                "no API key found (checked " +
                    (args.api_key_env.empty() ? std::string("MMARC_API_KEY, OPENAI_API_KEY")
                                              : args.api_key_env) +
                    "); pass --no-auth for keyless endpoints");
}

struct BackendBundle {
    std::unique_ptr<Backend> owned;
    std::unique_ptr<TranscriptWriter> writer;
    std::unique_ptr<RecordingBackend> recorder;
    Backend* active = nullptr;
    std::string identity;
};

BackendBundle make_backend(const RunArgs& args, bool force_replay, bool force_record) {
    BackendBundle bundle;
    std::string kind = args.backend;
    if (force_replay) kind = "replay";

    if (kind == "scripted") {
        if (args.script.empty()) {
            throw Error(ErrorCode::ConfigError, "scripted backend requires --script");
        }
        bundle.owned = std::make_unique<ScriptedBackend>(load_script_file(args.script));
    } else if (kind == "replay") {
        if (args.transcript.empty()) {
            throw Error(ErrorCode::ConfigError, "replay backend requires --transcript");
        }
        bundle.owned = std::make_unique<ReplayBackend>(args.transcript);
    } else if (kind == "remote") {
        RemoteConfig rc;
        rc.endpoint = args.endpoint;
        rc.model = args.model;
        rc.api_key = resolve_api_key(args);
        rc.max_inflight = std::max(1, args.workers);
        bundle.owned = std::make_unique<RemoteBackend>(rc);
    } else {
        throw Error(ErrorCode::UsageError, "unknown backend \"" + kind + "\"");
    }

    bundle.active = bundle.owned.get();
    bundle.identity = bundle.owned->identity();

    const bool record = (force_record || args.record) && kind != "replay";
    if (record) {
        if (args.transcript.empty()) {
            throw Error(ErrorCode::ConfigError, "recording requires --transcript");
        }
        const fs::path blob_dir = fs::path(args.transcript).parent_path() / "blobs";
        bundle.writer = std::make_unique<TranscriptWriter>(args.transcript, blob_dir.string());
        bundle.recorder = std::make_unique<RecordingBackend>(*bundle.owned, *bundle.writer);
        bundle.active = bundle.recorder.get();
        bundle.identity += "+record";
    }
    return bundle;
}

RunManifest make_manifest(const RunArgs& args, const PipelineConfig& cfg, const DatasetSpec& spec,
                          const PromptKit& kit, const std::string& backend_identity) {
    RunManifest manifest;
    manifest.pipeline = cfg;
    manifest.dataset = spec;
    manifest.templates_checksum = kit.templates().checksum();
    manifest.templates_dir = kit.templates().dir();
    manifest.backend_identity = backend_identity;
    manifest.started_at = now_rfc3339_utc();
    manifest.notes = {
        "sampling: tasks sorted by id, seeded shuffle selects without replacement; "
        "rearc/barc tasks are rebuilt as 3 examples + 1 test from a task-scoped shuffle",
        "textual self-check verification mirrors the visual verification wording with "
        "matrices in place of images",
        "no system prompt; answers are read from the last \\boxed{} group",
    };
    manifest.run_id = RunManifest::derive_run_id(manifest.core_json());
    return manifest;
}

int do_run(const RunArgs& args, bool force_replay, bool force_record) {
    const PipelineMode mode = pipeline_mode_from_name(args.mode);
    PipelineConfig cfg = make_pipeline_config(args, mode);
    DatasetSpec spec = make_dataset_spec(args);

    std::vector<Task> tasks = sample_tasks(spec, load_pool(spec));
    PromptKit kit(TemplateSet::load(resolve_templates_dir(args.templates)), cfg.render);
    BackendBundle backend = make_backend(args, force_replay, force_record);
    RunManifest manifest = make_manifest(args, cfg, spec, kit, backend.identity);

    std::signal(SIGINT, handle_sigint);
    Runner runner(std::move(tasks), *backend.active, kit, manifest, args.out_dir, args.workers);
    RunOutcome outcome = runner.execute();
    if (outcome.interrupted) return 130;
    std::cout << "run " << manifest.run_id << ": " << outcome.results.size() << " results in "
              << args.out_dir << "\n";
    return 0;
}

int do_ablate(const RunArgs& args) {
    struct Arm {
        Modality sum;
        Modality app;
        const char* key;
    };
    const Arm arms[] = {
        {Modality::Text, Modality::Text, "sum-text_app-text"},
        {Modality::Vision, Modality::Text, "sum-vision_app-text"},
        {Modality::Text, Modality::Vision, "sum-text_app-vision"},
        {Modality::Vision, Modality::Vision, "sum-vision_app-vision"},
    };

    DatasetSpec spec = make_dataset_spec(args);
    std::vector<Task> tasks = sample_tasks(spec, load_pool(spec));

    std::signal(SIGINT, handle_sigint);
    json arm_reports = json::object();
    std::map<std::string, double> pass_by_key;
    for (const Arm& arm : arms) {
        RunArgs arm_args = args;
        arm_args.sum_modality = modality_name(arm.sum);
        arm_args.app_modality = modality_name(arm.app);
        PipelineConfig cfg = make_pipeline_config(arm_args, PipelineMode::Ablation);
        PromptKit kit(TemplateSet::load(resolve_templates_dir(args.templates)), cfg.render);
        BackendBundle backend = make_backend(args, false, args.record);
        RunManifest manifest = make_manifest(arm_args, cfg, spec, kit, backend.identity);
        const std::string arm_dir = (fs::path(args.out_dir) / arm.key).string();
        Runner runner(tasks, *backend.active, kit, manifest, arm_dir, args.workers);
        RunOutcome outcome = runner.execute();
        if (outcome.interrupted) return 130;
        RunReport report = report_from_json_file((fs::path(arm_dir) / "report.json").string());
        pass_by_key[arm.key] = report.pass_at_1;
        arm_reports[arm.key] = {{"run_id", report.run_id},
                                {"pass_at_1", report.pass_at_1},
                                {"out_dir", arm_dir}};
    }

    // Rule-Sum. columns hold application fixed at text; Rule-App. columns
    // hold summarization fixed at vision. The vision/text middle columns
    // therefore share the (vision,text) arm.
    json table = {
        {"rule_sum_text", pass_by_key["sum-text_app-text"]},
        {"rule_sum_vision", pass_by_key["sum-vision_app-text"]},
        {"rule_app_text", pass_by_key["sum-vision_app-text"]},
        {"rule_app_vision", pass_by_key["sum-vision_app-vision"]},
    };
    json out = {{"arms", arm_reports}, {"table", table}};
    write_text_file((fs::path(args.out_dir) / "ablation.json").string(), out.dump(2) + "\n");

    std::string md;
    md += "# Modality ablation\n\n";
    md += "Model: " + args.model + ", dataset: " + args.dataset + ", seed " +
          std::to_string(args.seed) + "\n\n";
    md += "| Run | Rule-Sum. text | Rule-Sum. vision | Rule-App. text | Rule-App. vision |\n";
    md += "| --- | --- | --- | --- | --- |\n";
    md += "| " + args.model + " | " + format_percent(table["rule_sum_text"].get<double>()) + " | " +
          format_percent(table["rule_sum_vision"].get<double>()) + " | " +
          format_percent(table["rule_app_text"].get<double>()) + " | " +
          format_percent(table["rule_app_vision"].get<double>()) + " |\n";
    write_text_file((fs::path(args.out_dir) / "ablation.md").string(), md);
    std::cout << "ablation sweep complete: 4 arms in " << args.out_dir << "\n";
    return 0;
}

struct RenderArgs {
    std::string task_file;
    std::string out_dir = ".";
    int cell_px = 30;
    int line_px = 2;
};

int do_render(const RenderArgs& args) {
    std::ifstream in(args.task_file);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + args.task_file);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string id = fs::path(args.task_file).stem().string();
    Task task = parse_task_document(id, ss.str());

    RenderConfig cfg;
    cfg.cell_px = args.cell_px;
    cfg.line_px = args.line_px;
    cfg.validate();

    fs::create_directories(args.out_dir);
    int written = 0;
    auto emit = [&](const Grid& g, const std::string& role, int index) {
        const std::string name = id + "_" + role + "_" + std::to_string(index) + ".png";
        write_png_file((fs::path(args.out_dir) / name).string(), render_grid(g, cfg));
        ++written;
    };
    for (std::size_t k = 0; k < task.examples.size(); ++k) {
        emit(task.examples[k].input, "ex_in", static_cast<int>(k));
        emit(*task.examples[k].output, "ex_out", static_cast<int>(k));
    }
    for (std::size_t i = 0; i < task.tests.size(); ++i) {
        emit(task.tests[i].input, "test_in", static_cast<int>(i));
    }
    std::cout << "wrote " << written << " images to " << args.out_dir << "\n";
    return 0;
}

int do_score(const std::string& run_dir, const std::string& dataset_override) {
    RunReport report = score_run_dir(
        run_dir, dataset_override.empty() ? std::nullopt : std::make_optional(dataset_override));
    std::cout << emit_report(report, ReportFormat::Markdown);
    return 0;
}

int do_report(const std::string& report_file, const std::string& format, const std::string& out) {
    ReportFormat fmt;
    if (format == "json") {
        fmt = ReportFormat::Json;
    } else if (format == "csv") {
        fmt = ReportFormat::Csv;
    } else if (format == "markdown" || format == "md") {
        fmt = ReportFormat::Markdown;
    } else {
        throw Error(ErrorCode::UsageError, "unknown format \"" + format + "\"");
    }
    const std::string text = emit_report(report_from_json_file(report_file), fmt);
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text_file(out, text);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multimodal reasoning harness for ARC-style grid puzzles"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run_cmd = app.add_subcommand("run", "execute a pipeline over a dataset");
    add_run_options(run_cmd, run_args, true);

    RunArgs record_args;
    CLI::App* record_cmd =
        app.add_subcommand("record", "run while recording every call to a transcript");
    add_run_options(record_cmd, record_args, true);

    RunArgs replay_args;
    CLI::App* replay_cmd =
        app.add_subcommand("replay", "re-execute a run from a transcript, no network");
    add_run_options(replay_cmd, replay_args, true);

    RunArgs ablate_args;
    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "sweep the four summarize/apply modality arms");
    add_run_options(ablate_cmd, ablate_args, false);

    RenderArgs render_args;
    CLI::App* render_cmd = app.add_subcommand("render", "convert a task file to PNG images");
    render_cmd->add_option("--task", render_args.task_file, "task JSON file")->required();
    render_cmd->add_option("--out", render_args.out_dir, "output directory")
        ->capture_default_str();
    render_cmd->add_option("--cell-px", render_args.cell_px, "cell size in pixels")
        ->capture_default_str();
    render_cmd->add_option("--line-px", render_args.line_px, "divider thickness in pixels")
        ->capture_default_str();

    std::string score_run_dir_arg;
    std::string score_dataset_override;
    CLI::App* score_cmd = app.add_subcommand("score", "re-score a finished run directory");
    score_cmd->add_option("--run-dir", score_run_dir_arg, "run directory with manifest + results")
        ->required();
    score_cmd->add_option("--dataset", score_dataset_override,
                          "override the dataset path recorded in the manifest");

    std::string report_file;
    std::string report_format = "markdown";
    std::string report_out;
    CLI::App* report_cmd = app.add_subcommand("report", "re-emit a report in another format");
    report_cmd->add_option("--report", report_file, "report.json path")->required();
    report_cmd->add_option("--format", report_format, "json | csv | markdown")
        ->capture_default_str();
    report_cmd->add_option("--out", report_out, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) return do_run(run_args, false, false);
        if (record_cmd->parsed()) return do_run(record_args, false, true);
        if (replay_cmd->parsed()) return do_run(replay_args, true, false);
        if (ablate_cmd->parsed()) return do_ablate(ablate_args);
        if (render_cmd->parsed()) return do_render(render_args);
        if (score_cmd->parsed()) return do_score(score_run_dir_arg, score_dataset_override);
        if (report_cmd->parsed()) return do_report(report_file, report_format, report_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
