#include "doctest.h"

#include <algorithm>

#include "mmarc/dataset.hpp"
#include "support/synthetic.hpp"

using namespace mmarc;
namespace ts = mmarc::testsupport;

TEST_CASE("parse_task_document minimal object") {
    const Task task = parse_task_document(
        "t", R"({"train":[{"input":[[1]],"output":[[2]]}],"test":[{"input":[[3]]}]})");
    CHECK(task.examples.size() == 1);
    CHECK(task.tests.size() == 1);
    CHECK_FALSE(task.tests[0].output.has_value());
    CHECK(task.examples[0].input == Grid::from_rows({{1}}));
}

TEST_CASE("parse_task_document schema errors") {
    auto expect = [](const std::string& doc, ErrorCode code, const std::string& fragment = "") {
        try {
            parse_task_document("t", doc);
            FAIL("expected error for ", doc);
        } catch (const Error& e) {
            CHECK(e.code() == code);
            if (!fragment.empty()) {
                CHECK(std::string(e.what()).find(fragment) != std::string::npos);
            }
        }
    };
    expect(R"({"train":[],"test":[{"input":[[1]]}]})", ErrorCode::SchemaError);
    expect(R"({"test":[{"input":[[1]]}]})", ErrorCode::SchemaError);
    expect(R"({"train":[{"input":[[1]],"output":[[2]]}]})", ErrorCode::SchemaError);
    expect(R"({"train":[{"input":[[1]],"output":[[2]]}],"test":[]})", ErrorCode::SchemaError);
    expect("not json at all", ErrorCode::SchemaError);
    // Ragged grid error carries the pair index context.
    expect(R"({"train":[{"input":[[1],[2,3]],"output":[[2]]}],"test":[{"input":[[1]]}]})",
           ErrorCode::RaggedRows, "train[0]");
    expect(R"({"train":[{"input":[[1]],"output":[[2]]}],"test":[{"input":[[11]]}]})",
           ErrorCode::ValueOutOfRange, "test[0]");
}

TEST_CASE("parse_task_document pair array form") {
    const Task task = parse_task_document(
        "r", R"([{"input":[[1]],"output":[[2]]},{"input":[[3]],"output":[[4]]},
                 {"input":[[5]],"output":[[6]]}])");
    CHECK(task.examples.size() == 2);
    CHECK(task.tests.size() == 1);
    CHECK(task.tests[0].output == Grid::from_rows({{6}}));
}

TEST_CASE("load_pool sorts by id regardless of directory order") {
    ts::TempDir dir("pool");
    auto tasks = ts::make_tasks(6, 42);
    std::reverse(tasks.begin(), tasks.end());
    ts::write_task_dir(dir.path(), tasks);

    DatasetSpec spec;
    spec.source = DatasetSource::ArcEvalDir;
    spec.path = dir.str();
    const auto pool = load_pool(spec);
    REQUIRE(pool.size() == 6);
    for (std::size_t i = 1; i < pool.size(); ++i) {
        CHECK(pool[i - 1].id < pool[i].id);
    }
}

TEST_CASE("barc jsonl file") {
    ts::TempDir dir("barc");
    const auto path = dir.path() / "pool.jsonl";
    std::string lines;
    lines +=
        R"({"name":"alpha","train":[{"input":[[1]],"output":[[2]]}],"test":[{"input":[[3]],"output":[[4]]}]})";
    lines += "\n";
    lines +=
        R"({"train":[{"input":[[5]],"output":[[6]]}],"test":[{"input":[[7]],"output":[[8]]}]})";
    lines += "\n";
    ts::write_file(path, lines);

    DatasetSpec spec;
    spec.source = DatasetSource::BarcFile;
    spec.path = path.string();
    const auto pool = load_pool(spec);
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].id == "alpha");
    CHECK(pool[1].id == "line000002");
}

TEST_CASE("sampling is deterministic and order independent") {
    auto tasks = ts::make_tasks(40, 7);
    DatasetSpec spec;
    spec.source = DatasetSource::ArcEvalDir;
    spec.sample_size = 10;
    spec.seed = 7;

    const auto first = sample_tasks(spec, tasks);
    const auto second = sample_tasks(spec, tasks);
    REQUIRE(first.size() == 10);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].id == second[i].id);
    }

    auto shuffled = tasks;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto third = sample_tasks(spec, shuffled);
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].id == third[i].id);
    }

    DatasetSpec other = spec;
    other.seed = 8;
    const auto different = sample_tasks(other, tasks);
    bool same = true;
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first[i].id != different[i].id) same = false;
    }
    CHECK_FALSE(same);
}

TEST_CASE("rearc sampling reassigns pairs 3+1") {
    Rng rng(13);
    // Build a 6-pair task in array form: 5 examples + 1 test once loaded.
    Task pool_task;
    pool_task.id = "sixpairs";
    for (int i = 0; i < 5; ++i) {
        Grid in = ts::random_grid(rng, 3, 3);
        pool_task.examples.push_back(Pair{in, ts::increment_grid(in)});
    }
    Grid last = ts::random_grid(rng, 3, 3);
    pool_task.tests.push_back(Pair{last, ts::increment_grid(last)});

    DatasetSpec spec;
    spec.source = DatasetSource::ReArcDir;
    spec.seed = 5;
    const auto sampled = sample_tasks(spec, {pool_task});
    REQUIRE(sampled.size() == 1);
    const Task& out = sampled[0];
    CHECK(out.examples.size() == 3);
    CHECK(out.tests.size() == 1);
    REQUIRE(out.tests[0].output.has_value());

    // Every emitted pair must come from the original six.
    std::vector<std::string> original;
    for (const Pair& p : pool_task.examples) original.push_back(encode_grid_text(p.input));
    original.push_back(encode_grid_text(pool_task.tests[0].input));
    auto member = [&](const Pair& p) {
        return std::find(original.begin(), original.end(), encode_grid_text(p.input)) !=
               original.end();
    };
    for (const Pair& p : out.examples) CHECK(member(p));
    CHECK(member(out.tests[0]));

    // Same seed, same reassignment.
    const auto again = sample_tasks(spec, {pool_task});
    CHECK(encode_grid_text(again[0].tests[0].input) == encode_grid_text(out.tests[0].input));
}

TEST_CASE("sampling error paths") {
    auto tasks = ts::make_tasks(5, 3);
    DatasetSpec spec;
    spec.source = DatasetSource::ArcEvalDir;
    spec.sample_size = 100;
    try {
        sample_tasks(spec, tasks);
        FAIL("expected InsufficientTasks");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientTasks);
    }

    // A rearc task with only 3 complete pairs cannot be reassigned.
    Rng rng(1);
    Task small;
    small.id = "small";
    for (int i = 0; i < 2; ++i) {
        Grid in = ts::random_grid(rng, 3, 3);
        small.examples.push_back(Pair{in, ts::increment_grid(in)});
    }
    Grid t = ts::random_grid(rng, 3, 3);
    small.tests.push_back(Pair{t, ts::increment_grid(t)});
    DatasetSpec rearc;
    rearc.source = DatasetSource::ReArcDir;
    try {
        sample_tasks(rearc, {small});
        FAIL("expected InsufficientPairs");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InsufficientPairs);
    }
}

TEST_CASE("rng bounded draws stay in range") {
    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        CHECK(rng.bounded(7) < 7);
    }
    CHECK(Rng(5).bounded(1) == 0);

    Rng a(9);
    Rng b(9);
    std::vector<int> va{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> vb = va;
    a.shuffle(va);
    b.shuffle(vb);
    CHECK(va == vb);
}
