#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mmarc/grid.hpp"

namespace mmarc {

// Deterministic across platforms: mt19937_64 is fully specified by the
// standard, and bounded draws use rejection sampling rather than the
// implementation-defined std::uniform_int_distribution.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    std::uint64_t bounded(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[bounded(i)]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

enum class DatasetSource { ArcEvalDir, ReArcDir, BarcFile };

const char* dataset_source_name(DatasetSource source);

struct DatasetSpec {
    DatasetSource source = DatasetSource::ArcEvalDir;
    std::string path;
    std::optional<std::size_t> sample_size;  // nullopt = all
    std::uint64_t seed = 0;
};

// Parses one ARC task document. Accepts either an object with "train" and
// "test" pair arrays, or a bare array of {"input","output"} pairs (Re-ARC
// style; the final pair becomes the test pair until sampling reassigns).
Task parse_task_document(const std::string& id, const std::string& json_text);

// Enumerates the source and returns tasks sorted by id, so directory
// enumeration order never influences anything downstream.
std::vector<Task> load_pool(const DatasetSpec& spec);

// Seeded selection without replacement; for Re-ARC/BARC sources every
// emitted task is reassembled as 3 example pairs + 1 test pair drawn from a
// task-scoped shuffle of all its pairs.
std::vector<Task> sample_tasks(const DatasetSpec& spec, const std::vector<Task>& pool);

// Stable per-task seed derived from the run seed and the task id.
std::uint64_t task_scoped_seed(std::uint64_t run_seed, const std::string& task_id);

}  // namespace mmarc
