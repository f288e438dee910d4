#include "mmarc/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mmarc/digest.hpp"

namespace mmarc {

using nlohmann::json;

std::uint64_t Rng::bounded(std::uint64_t n) {
    if (n <= 1) return 0;
    // Rejection sampling keeps draws unbiased and platform-stable.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t draw;
    do {
        draw = engine_();
    } while (draw >= limit);
    return draw % n;
}

const char* dataset_source_name(DatasetSource source) {
    switch (source) {
        case DatasetSource::ArcEvalDir: return "arc-eval-dir";
        case DatasetSource::ReArcDir: return "rearc-dir";
        case DatasetSource::BarcFile: return "barc-file";
    }
    return "unknown";
}

namespace {

Grid grid_from_json(const json& j, const std::string& context) {
    if (!j.is_array()) {
        throw Error(ErrorCode::SchemaError, context + ": grid is not an array");
    }
    std::vector<std::vector<int>> rows;
    rows.reserve(j.size());
    for (const json& row : j) {
        if (!row.is_array()) {
            throw Error(ErrorCode::SchemaError, context + ": grid row is not an array");
        }
        std::vector<int> cells;
        cells.reserve(row.size());
        for (const json& cell : row) {
            if (!cell.is_number_integer()) {
                throw Error(ErrorCode::SchemaError, context + ": grid cell is not an integer");
            }
            cells.push_back(cell.get<int>());
        }
        rows.push_back(std::move(cells));
    }
    try {
        return Grid::from_rows(rows);
    } catch (const Error& e) {
        throw Error(e.code(), context + ": " + e.what());
    }
}

Pair pair_from_json(const json& j, const std::string& context, bool output_required) {
    if (!j.is_object() || !j.contains("input")) {
        throw Error(ErrorCode::SchemaError, context + ": pair lacks an input grid");
    }
    std::optional<Grid> output;
    if (j.contains("output") && !j["output"].is_null()) {
        output = grid_from_json(j["output"], context + ".output");
    } else if (output_required) {
        throw Error(ErrorCode::SchemaError, context + ": pair lacks an output grid");
    }
    return Pair{grid_from_json(j["input"], context + ".input"), std::move(output)};
}

Task task_from_json(const std::string& id, const json& doc) {
    Task task;
    task.id = id;
    if (doc.is_object()) {
        if (!doc.contains("train") || !doc["train"].is_array()) {
            throw Error(ErrorCode::SchemaError, "task " + id + ": missing \"train\" array");
        }
        if (!doc.contains("test") || !doc["test"].is_array()) {
            throw Error(ErrorCode::SchemaError, "task " + id + ": missing \"test\" array");
        }
        if (doc["train"].empty()) {
            throw Error(ErrorCode::SchemaError, "task " + id + ": \"train\" is empty (K >= 1)");
        }
        if (doc["test"].empty()) {
            throw Error(ErrorCode::SchemaError, "task " + id + ": \"test\" is empty");
        }
        std::size_t idx = 0;
        for (const json& p : doc["train"]) {
            task.examples.push_back(
                pair_from_json(p, "task " + id + " train[" + std::to_string(idx) + "]", true));
            ++idx;
        }
        idx = 0;
        for (const json& p : doc["test"]) {
            task.tests.push_back(
                pair_from_json(p, "task " + id + " test[" + std::to_string(idx) + "]", false));
            ++idx;
        }
    } else if (doc.is_array()) {
        // Re-ARC style: a bare list of complete pairs. The last pair stands
        // in as the test pair until sampling reassigns.
        if (doc.size() < 2) {
            throw Error(ErrorCode::SchemaError,
                        "task " + id + ": pair list needs at least 2 pairs");
        }
        std::size_t idx = 0;
        for (const json& p : doc) {
            Pair pair = pair_from_json(p, "task " + id + " pairs[" + std::to_string(idx) + "]", true);
            if (idx + 1 == doc.size()) {
                task.tests.push_back(std::move(pair));
            } else {
                task.examples.push_back(std::move(pair));
            }
            ++idx;
        }
    } else {
        throw Error(ErrorCode::SchemaError, "task " + id + ": document is neither object nor array");
    }
    task.validate();
    return task;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<Task> load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, dir + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Task> tasks;
    tasks.reserve(files.size());
    for (const fs::path& file : files) {
        tasks.push_back(parse_task_document(file.stem().string(), read_text_file(file)));
    }
    return tasks;
}

std::string line_task_id(const json& doc, std::size_t line_no) {
    if (doc.is_object()) {
        if (doc.contains("name") && doc["name"].is_string()) return doc["name"].get<std::string>();
        if (doc.contains("id") && doc["id"].is_string()) return doc["id"].get<std::string>();
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "line%06zu", line_no);
    return buf;
}

std::vector<Task> load_barc_file(const std::string& path) {
    namespace fs = std::filesystem;
    if (!fs::is_regular_file(path)) {
        throw Error(ErrorCode::IoError, path + " is not a file");
    }
    std::vector<Task> tasks;
    if (fs::path(path).extension() == ".jsonl") {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorCode::IoError, "cannot read " + path);
        }
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) {
                throw Error(ErrorCode::SchemaError,
                            path + " line " + std::to_string(line_no) + ": invalid JSON");
            }
            tasks.push_back(task_from_json(line_task_id(doc, line_no), doc));
        }
    } else {
        json doc = json::parse(read_text_file(path), nullptr, false);
        if (doc.is_discarded()) {
            throw Error(ErrorCode::SchemaError, path + ": invalid JSON");
        }
        if (doc.is_array() && !doc.empty() && (doc[0].is_object() && !doc[0].contains("input"))) {
            // Array of task documents.
            std::size_t idx = 0;
            for (const json& element : doc) {
                tasks.push_back(task_from_json(line_task_id(element, idx), element));
                ++idx;
            }
        } else {
            tasks.push_back(task_from_json(fs::path(path).stem().string(), doc));
        }
    }
    return tasks;
}

}  // namespace

Task parse_task_document(const std::string& id, const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::SchemaError, "task " + id + ": invalid JSON");
    }
    return task_from_json(id, doc);
}

std::vector<Task> load_pool(const DatasetSpec& spec) {
    std::vector<Task> tasks;
    switch (spec.source) {
        case DatasetSource::ArcEvalDir:
        case DatasetSource::ReArcDir:
            tasks = load_dir(spec.path);
            break;
        case DatasetSource::BarcFile:
            tasks = load_barc_file(spec.path);
            break;
    }
    std::sort(tasks.begin(), tasks.end(),
              [](const Task& a, const Task& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < tasks.size(); ++i) {
        if (tasks[i].id == tasks[i - 1].id) {
            throw Error(ErrorCode::SchemaError, "duplicate task id " + tasks[i].id);
        }
    }
    return tasks;
}

std::uint64_t task_scoped_seed(std::uint64_t run_seed, const std::string& task_id) {
    return sha256_prefix64(std::to_string(run_seed) + "/" + task_id);
}

namespace {

// Reassemble a pool task as exactly 3 examples + 1 test, drawn from a
// task-scoped shuffle of its complete pairs.
Task reassign_pairs(const Task& task, std::uint64_t run_seed) {
    std::vector<Pair> pairs;
    for (const Pair& p : task.examples) {
        if (p.output) pairs.push_back(p);
    }
    for (const Pair& p : task.tests) {
        if (p.output) pairs.push_back(p);
    }
    if (pairs.size() < 4) {
        throw Error(ErrorCode::InsufficientPairs,
                    "task " + task.id + " has " + std::to_string(pairs.size()) +
                        " complete pairs; sampling needs 4");
    }
    Rng rng(task_scoped_seed(run_seed, task.id));
    rng.shuffle(pairs);
    Task out;
    out.id = task.id;
    out.examples.assign(pairs.begin(), pairs.begin() + 3);
    out.tests.assign(pairs.begin() + 3, pairs.begin() + 4);
    return out;
}

}  // namespace

std::vector<Task> sample_tasks(const DatasetSpec& spec, const std::vector<Task>& pool) {
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Selection depends only on (seed, pool order after id sort).
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });

    const std::size_t want = spec.sample_size.value_or(pool.size());
    if (want > pool.size()) {
        throw Error(ErrorCode::InsufficientTasks, "pool has " + std::to_string(pool.size()) +
                                                      " tasks; requested " + std::to_string(want));
    }
    Rng rng(spec.seed);
    rng.shuffle(order);
    order.resize(want);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pool[a].id < pool[b].id; });

    std::vector<Task> out;
    out.reserve(want);
    for (std::size_t idx : order) {
        if (spec.source == DatasetSource::ArcEvalDir) {
            out.push_back(pool[idx]);
        } else {
            out.push_back(reassign_pairs(pool[idx], spec.seed));
        }
    }
    return out;
}

}  // namespace mmarc
