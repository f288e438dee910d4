#include "mmarc/render.hpp"

#include <cmath>
#include <limits>

namespace mmarc {

namespace {

double rgb_distance(const Rgb& a, const Rgb& b) {
    const double dr = static_cast<double>(a.r) - b.r;
    const double dg = static_cast<double>(a.g) - b.g;
    const double db = static_cast<double>(a.b) - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

}  // namespace

void Palette::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].color == kDividerColor) {
            throw Error(ErrorCode::ColorMismatch,
                        "palette entry " + std::to_string(i) + " equals the divider color");
        }
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            if (entries[i].color == entries[j].color) {
                throw Error(ErrorCode::ColorMismatch, "palette entries " + std::to_string(i) +
                                                          " and " + std::to_string(j) +
                                                          " are identical");
            }
        }
    }
}

double Palette::decode_tolerance() const {
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            min_dist = std::min(min_dist, rgb_distance(entries[i].color, entries[j].color));
        }
    }
    return min_dist / 2.0;
}

Palette Palette::standard() {
    return Palette{{{
        {"black", {0, 0, 0}},
        {"blue", {0, 116, 217}},
        {"red", {255, 65, 54}},
        {"green", {46, 204, 64}},
        {"yellow", {255, 220, 0}},
        {"grey", {170, 170, 170}},
        {"pink", {240, 18, 190}},
        {"orange", {255, 133, 27}},
        {"light blue", {127, 219, 255}},
        {"brown", {135, 77, 42}},
    }}};
}

void RenderConfig::validate() const {
    if (cell_px < 4) {
        throw Error(ErrorCode::GeometryMismatch, "cell_px must be >= 4");
    }
    if (line_px < 1) {
        throw Error(ErrorCode::GeometryMismatch, "line_px must be >= 1");
    }
    if (cell_px <= 2 * line_px) {
        throw Error(ErrorCode::GeometryMismatch, "cell_px must exceed 2*line_px");
    }
    palette.validate();
}

Image render_grid(const Grid& g, const RenderConfig& cfg) {
    cfg.validate();
    const int border = cfg.outer_border ? cfg.line_px : 0;
    const int width = g.cols() * cfg.cell_px + (g.cols() - 1) * cfg.line_px + 2 * border;
    const int height = g.rows() * cfg.cell_px + (g.rows() - 1) * cfg.line_px + 2 * border;

    Image img;
    img.width = width;
    img.height = height;
    img.pixels.assign(static_cast<std::size_t>(width) * height * 3, 255);  // divider white

    for (int r = 0; r < g.rows(); ++r) {
        const int y0 = border + r * (cfg.cell_px + cfg.line_px);
        for (int c = 0; c < g.cols(); ++c) {
            const int x0 = border + c * (cfg.cell_px + cfg.line_px);
            const Rgb color = cfg.palette.entries[g.at(r, c)].color;
            for (int y = y0; y < y0 + cfg.cell_px; ++y) {
                std::size_t idx = (static_cast<std::size_t>(y) * width + x0) * 3;
                for (int x = 0; x < cfg.cell_px; ++x) {
                    img.pixels[idx++] = color.r;
                    img.pixels[idx++] = color.g;
                    img.pixels[idx++] = color.b;
                }
            }
        }
    }
    return img;
}

namespace {

// Solve extent = n*cell + (n-1)*line for integer n >= 1.
int infer_cell_count(int extent, const RenderConfig& cfg, const char* axis) {
    const int inner = extent - (cfg.outer_border ? 2 * cfg.line_px : 0);
    const int pitch = cfg.cell_px + cfg.line_px;
    if (inner < cfg.cell_px || (inner + cfg.line_px) % pitch != 0) {
        throw Error(ErrorCode::GeometryMismatch,
                    std::string(axis) + " extent " + std::to_string(extent) +
                        " fits no integer cell count");
    }
    return (inner + cfg.line_px) / pitch;
}

}  // namespace

Grid decode_image(const Image& img, const RenderConfig& cfg) {
    cfg.validate();
    const int cols = infer_cell_count(img.width, cfg, "width");
    const int rows = infer_cell_count(img.height, cfg, "height");
    const int border = cfg.outer_border ? cfg.line_px : 0;
    const double tolerance = cfg.palette.decode_tolerance();

    std::vector<std::uint8_t> cells;
    cells.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        const int cy = border + r * (cfg.cell_px + cfg.line_px) + cfg.cell_px / 2;
        for (int c = 0; c < cols; ++c) {
            const int cx = border + c * (cfg.cell_px + cfg.line_px) + cfg.cell_px / 2;
            const Rgb px = img.at(cx, cy);
            int best = -1;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int v = 0; v < 10; ++v) {
                const double d = rgb_distance(px, cfg.palette.entries[v].color);
                if (d < best_dist) {
                    best_dist = d;
                    best = v;
                }
            }
            if (best_dist >= tolerance) {
                throw Error(ErrorCode::ColorMismatch,
                            "cell (" + std::to_string(r) + "," + std::to_string(c) +
                                ") center is not close to any palette color");
            }
            cells.push_back(static_cast<std::uint8_t>(best));
        }
    }
    return Grid(rows, cols, std::move(cells));
}

std::string color_legend_text(const Palette& p) {
    std::string out = "[";
    for (std::size_t i = 0; i < p.entries.size(); ++i) {
        if (i > 0) out += "; ";
        out += std::to_string(i) + ":" + p.entries[i].name;
    }
    out += "]";
    return out;
}

}  // namespace mmarc
