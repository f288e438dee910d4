#include "mmarc/grid.hpp"

#include <cctype>

namespace mmarc {

Grid::Grid(int rows, int cols, std::vector<std::uint8_t> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
    if (rows_ < 1 || rows_ > kMaxGridDim || cols_ < 1 || cols_ > kMaxGridDim) {
        throw Error(ErrorCode::SizeOutOfRange,
                    "grid dims " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " outside 1.." + std::to_string(kMaxGridDim));
    }
    if (cells_.size() != static_cast<std::size_t>(rows_) * cols_) {
        throw Error(ErrorCode::Malformed, "cell count does not match rows*cols");
    }
    for (std::uint8_t v : cells_) {
        if (v > kMaxCellValue) {
            throw Error(ErrorCode::ValueOutOfRange, "cell value " + std::to_string(v) + " outside 0..9");
        }
    }
}

Grid Grid::from_rows(const std::vector<std::vector<int>>& rows) {
    if (rows.empty()) {
        throw Error(ErrorCode::SizeOutOfRange, "grid has 0 rows");
    }
    const std::size_t cols = rows.front().size();
    std::vector<std::uint8_t> cells;
    cells.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols) {
            throw Error(ErrorCode::RaggedRows, "rows of unequal length");
        }
        for (int v : row) {
            if (v < 0 || v > kMaxCellValue) {
                throw Error(ErrorCode::ValueOutOfRange, "cell value " + std::to_string(v) + " outside 0..9");
            }
            cells.push_back(static_cast<std::uint8_t>(v));
        }
    }
    if (cols == 0) {
        throw Error(ErrorCode::SizeOutOfRange, "grid has 0 cols");
    }
    return Grid(static_cast<int>(rows.size()), static_cast<int>(cols), std::move(cells));
}

void Task::validate() const {
    if (id.empty()) {
        throw Error(ErrorCode::SchemaError, "task id is empty");
    }
    if (examples.empty()) {
        throw Error(ErrorCode::SchemaError, "task " + id + " has no example pairs");
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!examples[i].output) {
            throw Error(ErrorCode::SchemaError,
                        "task " + id + " example pair " + std::to_string(i) + " lacks an output");
        }
    }
    if (tests.empty()) {
        throw Error(ErrorCode::SchemaError, "task " + id + " has no test pairs");
    }
}

RedactedTask redact(const Task& task) {
    RedactedTask view;
    view.id = task.id;
    view.examples = task.examples;
    view.test_inputs.reserve(task.tests.size());
    for (const Pair& p : task.tests) {
        view.test_inputs.push_back(p.input);
    }
    return view;
}

std::string encode_grid_text(const Grid& g) {
    std::string out;
    out.reserve(static_cast<std::size_t>(g.rows()) * g.cols() * 3 + g.rows() * 4);
    out.push_back('[');
    for (int r = 0; r < g.rows(); ++r) {
        if (r > 0) out += ", ";
        out.push_back('[');
        for (int c = 0; c < g.cols(); ++c) {
            if (c > 0) out += ", ";
            out.push_back(static_cast<char>('0' + g.at(r, c)));
        }
        out.push_back(']');
    }
    out.push_back(']');
    return out;
}

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
};

int parse_cell(Cursor& cur) {
    cur.skip_ws();
    if (cur.eof()) {
        throw Error(ErrorCode::Malformed, "unexpected end of input in cell");
    }
    bool negative = false;
    if (cur.peek() == '-') {
        negative = true;
        ++cur.pos;
    }
    if (cur.eof() || !std::isdigit(static_cast<unsigned char>(cur.peek()))) {
        throw Error(ErrorCode::Malformed,
                    "expected integer at offset " + std::to_string(cur.pos));
    }
    long value = 0;
    while (!cur.eof() && std::isdigit(static_cast<unsigned char>(cur.peek()))) {
        if (value <= 1000) value = value * 10 + (cur.peek() - '0');
        ++cur.pos;
    }
    if (negative) value = -value;
    if (value < 0 || value > kMaxCellValue) {
        throw Error(ErrorCode::ValueOutOfRange, "cell value " + std::to_string(value) + " outside 0..9");
    }
    return static_cast<int>(value);
}

std::vector<int> parse_row(Cursor& cur) {
    cur.skip_ws();
    if (cur.eof() || cur.peek() != '[') {
        throw Error(ErrorCode::Malformed, "expected '[' to open a row");
    }
    ++cur.pos;
    std::vector<int> row;
    cur.skip_ws();
    if (!cur.eof() && cur.peek() == ']') {
        ++cur.pos;
        return row;  // empty row; caught as SizeOutOfRange later
    }
    while (true) {
        row.push_back(parse_cell(cur));
        cur.skip_ws();
        if (cur.eof()) {
            throw Error(ErrorCode::Malformed, "unbalanced brackets: row not closed");
        }
        if (cur.peek() == ',') {
            ++cur.pos;
            continue;
        }
        if (cur.peek() == ']') {
            ++cur.pos;
            return row;
        }
        throw Error(ErrorCode::Malformed,
                    std::string("unexpected character '") + cur.peek() + "' in row");
    }
}

}  // namespace

Grid parse_grid_text(std::string_view text) {
    Cursor cur{text};
    cur.skip_ws();
    if (cur.eof() || cur.peek() != '[') {
        throw Error(ErrorCode::Malformed, "expected '[' to open the grid");
    }
    ++cur.pos;
    std::vector<std::vector<int>> rows;
    cur.skip_ws();
    if (!cur.eof() && cur.peek() == ']') {
        ++cur.pos;
        throw Error(ErrorCode::SizeOutOfRange, "grid has 0 rows");
    }
    while (true) {
        rows.push_back(parse_row(cur));
        if (rows.size() > 1 && rows.back().size() != rows.front().size()) {
            throw Error(ErrorCode::RaggedRows, "row " + std::to_string(rows.size() - 1) +
                                                   " has " + std::to_string(rows.back().size()) +
                                                   " cells, expected " +
                                                   std::to_string(rows.front().size()));
        }
        if (rows.size() > kMaxGridDim) {
            throw Error(ErrorCode::SizeOutOfRange, "more than 30 rows");
        }
        cur.skip_ws();
        if (cur.eof()) {
            throw Error(ErrorCode::Malformed, "unbalanced brackets: grid not closed");
        }
        if (cur.peek() == ',') {
            ++cur.pos;
            continue;
        }
        if (cur.peek() == ']') {
            ++cur.pos;
            break;
        }
        throw Error(ErrorCode::Malformed,
                    std::string("unexpected character '") + cur.peek() + "' between rows");
    }
    cur.skip_ws();
    if (!cur.eof()) {
        throw Error(ErrorCode::Malformed, "trailing characters after the grid");
    }
    if (rows.front().empty()) {
        throw Error(ErrorCode::SizeOutOfRange, "grid has 0 cols");
    }
    if (rows.front().size() > kMaxGridDim) {
        throw Error(ErrorCode::SizeOutOfRange, "more than 30 cols");
    }
    return Grid::from_rows(rows);
}

bool grids_equal(const Grid& a, const Grid& b) {
    return a == b;
}

}  // namespace mmarc
