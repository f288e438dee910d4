#include "doctest.h"

#include "mmarc/grid.hpp"
#include "support/synthetic.hpp"

using namespace mmarc;
using mmarc::testsupport::random_grid;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::Malformed;
}

}  // namespace

TEST_CASE("encode_grid_text canonical form") {
    CHECK(encode_grid_text(Grid::from_rows({{0, 1, 2}, {3, 4, 5}, {2, 3, 5}})) ==
          "[[0, 1, 2], [3, 4, 5], [2, 3, 5]]");
    CHECK(encode_grid_text(Grid::from_rows({{7}})) == "[[7]]");
    CHECK(encode_grid_text(Grid::from_rows({{0}, {9}})) == "[[0], [9]]");
}

TEST_CASE("parse_grid_text accepts canonical and sloppy forms") {
    const Grid expected = Grid::from_rows({{0, 1, 2}, {3, 4, 5}, {2, 3, 5}});
    CHECK(parse_grid_text("[[0,1,2],[3,4,5],[2,3,5]]") == expected);
    CHECK(parse_grid_text("  [ [ 0 , 1 ,2 ],\n [3, 4, 5]\t,[2,3,5] ]  ") == expected);
    CHECK(parse_grid_text("[[7]]") == Grid::from_rows({{7}}));
}

TEST_CASE("parse_grid_text typed errors") {
    CHECK(code_of([] { parse_grid_text("[[0, 1], [2]]"); }) == ErrorCode::RaggedRows);
    CHECK(code_of([] { parse_grid_text("[[10]]"); }) == ErrorCode::ValueOutOfRange);
    CHECK(code_of([] { parse_grid_text("[[-1]]"); }) == ErrorCode::ValueOutOfRange);
    CHECK(code_of([] { parse_grid_text("[]"); }) == ErrorCode::SizeOutOfRange);
    CHECK(code_of([] { parse_grid_text("[[]]"); }) == ErrorCode::SizeOutOfRange);
    CHECK(code_of([] { parse_grid_text("[[1,2]"); }) == ErrorCode::Malformed);
    CHECK(code_of([] { parse_grid_text("[[1,2]] trailing"); }) == ErrorCode::Malformed);
    CHECK(code_of([] { parse_grid_text("[[a]]"); }) == ErrorCode::Malformed);
    CHECK(code_of([] { parse_grid_text("nonsense"); }) == ErrorCode::Malformed);
    CHECK(code_of([] { parse_grid_text(""); }) == ErrorCode::Malformed);

    std::string too_wide = "[[0";
    for (int i = 0; i < 30; ++i) too_wide += ",0";
    too_wide += "]]";
    CHECK(code_of([&] { parse_grid_text(too_wide); }) == ErrorCode::SizeOutOfRange);

    std::string too_tall = "[";
    for (int i = 0; i < 31; ++i) {
        if (i > 0) too_tall += ",";
        too_tall += "[0]";
    }
    too_tall += "]";
    CHECK(code_of([&] { parse_grid_text(too_tall); }) == ErrorCode::SizeOutOfRange);
}

TEST_CASE("parser totality over junk inputs") {
    Rng rng(99);
    const std::string alphabet = "[],0123456789 ab{}-";
    for (int trial = 0; trial < 500; ++trial) {
        std::string junk;
        const int len = static_cast<int>(rng.bounded(40));
        for (int i = 0; i < len; ++i) {
            junk += alphabet[rng.bounded(alphabet.size())];
        }
        try {
            (void)parse_grid_text(junk);
        } catch (const Error&) {
            // typed failure is the contract; anything else escapes the test
        }
    }
}

TEST_CASE("round trip over every dimension pair") {
    Rng rng(7);
    for (int rows = 1; rows <= 30; ++rows) {
        for (int cols = 1; cols <= 30; ++cols) {
            const Grid g = random_grid(rng, rows, cols);
            CHECK(parse_grid_text(encode_grid_text(g)) == g);
        }
    }
}

TEST_CASE("grids_equal") {
    Rng rng(3);
    const Grid a = random_grid(rng, 4, 5);
    CHECK(grids_equal(a, a));
    CHECK_FALSE(grids_equal(Grid::from_rows({{1, 2}, {3, 4}}),
                            Grid::from_rows({{1, 2, 0}, {3, 4, 0}})));
    Grid b = a;
    std::vector<std::uint8_t> cells = b.cells();
    cells[7] = static_cast<std::uint8_t>((cells[7] + 1) % 10);
    const Grid c(a.rows(), a.cols(), cells);
    CHECK_FALSE(grids_equal(a, c));
}

TEST_CASE("Grid constructor enforces invariants") {
    CHECK(code_of([] { Grid(0, 1, {}); }) == ErrorCode::SizeOutOfRange);
    CHECK(code_of([] { Grid(31, 1, std::vector<std::uint8_t>(31, 0)); }) ==
          ErrorCode::SizeOutOfRange);
    CHECK(code_of([] { Grid(2, 2, {0, 1, 2}); }) == ErrorCode::Malformed);
    CHECK(code_of([] { Grid(1, 1, {10}); }) == ErrorCode::ValueOutOfRange);
}

TEST_CASE("task validation and redaction") {
    Rng rng(11);
    Task task = testsupport::make_task("demo", rng, 2, 2);
    task.validate();

    Task no_examples = task;
    no_examples.examples.clear();
    CHECK(code_of([&] { no_examples.validate(); }) == ErrorCode::SchemaError);

    Task no_tests = task;
    no_tests.tests.clear();
    CHECK(code_of([&] { no_tests.validate(); }) == ErrorCode::SchemaError);

    Task hole = task;
    hole.examples[1].output.reset();
    CHECK(code_of([&] { hole.validate(); }) == ErrorCode::SchemaError);

    const RedactedTask view = redact(task);
    CHECK(view.id == task.id);
    CHECK(view.examples.size() == task.examples.size());
    REQUIRE(view.test_inputs.size() == task.tests.size());
    for (std::size_t i = 0; i < view.test_inputs.size(); ++i) {
        CHECK(view.test_inputs[i] == task.tests[i].input);
    }
}
