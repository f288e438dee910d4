#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmarc/errors.hpp"

namespace mmarc {

inline constexpr int kMaxGridDim = 30;
inline constexpr int kMaxCellValue = 9;

// Rectangular matrix of cell values 0..9, row-major, dims 1..30.
// Invariants are enforced at construction; a Grid instance is always valid.
class Grid {
  public:
    Grid(int rows, int cols, std::vector<std::uint8_t> cells);

    static Grid from_rows(const std::vector<std::vector<int>>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::uint8_t at(int r, int c) const { return cells_[static_cast<std::size_t>(r) * cols_ + c]; }
    const std::vector<std::uint8_t>& cells() const { return cells_; }

    friend bool operator==(const Grid& a, const Grid& b) = default;

  private:
    int rows_;
    int cols_;
    std::vector<std::uint8_t> cells_;
};

struct Pair {
    Grid input;
    std::optional<Grid> output;  // absent for unsolved test pairs
};

// K demonstration pairs plus one or more test pairs. Ground-truth test
// outputs, when present, are for scoring only; prompt construction goes
// through the redacted view below.
struct Task {
    std::string id;
    std::vector<Pair> examples;  // K >= 1, outputs always present
    std::vector<Pair> tests;     // non-empty

    void validate() const;
};

// What prompt builders are allowed to see: example pairs and bare test inputs.
struct RedactedTask {
    std::string id;
    std::vector<Pair> examples;
    std::vector<Grid> test_inputs;
};

RedactedTask redact(const Task& task);

// Textual codec T: canonical nested-list form "[[0, 1], [2, 3]]".
std::string encode_grid_text(const Grid& g);

// Inverse codec T^-1, whitespace-lenient. Throws Error with code
// Malformed / RaggedRows / ValueOutOfRange / SizeOutOfRange.
Grid parse_grid_text(std::string_view text);

bool grids_equal(const Grid& a, const Grid& b);

}  // namespace mmarc
