#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmarc/grid.hpp"

namespace mmarc {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kDividerColor{255, 255, 255};  // pure white

// Fixed value -> color map, ten named entries. Entries must be pairwise
// distinct and none may collide with the white divider color.
struct Palette {
    struct Entry {
        std::string name;
        Rgb color;
    };
    std::array<Entry, 10> entries;

    void validate() const;
    // Half the minimum pairwise distance; the decode tolerance.
    double decode_tolerance() const;

    static Palette standard();
};

struct RenderConfig {
    int cell_px = 30;
    int line_px = 2;
    bool outer_border = false;
    Palette palette = Palette::standard();

    void validate() const;
};

// 8-bit RGB raster, row-major, no padding.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width*height*3

    Rgb at(int x, int y) const {
        std::size_t idx = (static_cast<std::size_t>(y) * width + x) * 3;
        return Rgb{pixels[idx], pixels[idx + 1], pixels[idx + 2]};
    }

    friend bool operator==(const Image&, const Image&) = default;
};

// Visual codec V: each cell a solid cell_px block of its palette color,
// line_px pure-white dividers between cells, no outer border unless asked.
Image render_grid(const Grid& g, const RenderConfig& cfg);

// Inverse codec V^-1: infer rows/cols from the image dimensions, sample each
// cell center, snap to the nearest palette entry. Throws GeometryMismatch
// when the dimensions fit no integer grid, ColorMismatch when a sampled pixel
// is not clearly one palette color.
Grid decode_image(const Image& img, const RenderConfig& cfg);

// "[0:black; 1:blue; ...]" as embedded in the rule-application prompt.
std::string color_legend_text(const Palette& p);

// Lossless PNG (8-bit RGB) encode/decode.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);

void write_png_file(const std::string& path, const Image& img);
Image read_png_file(const std::string& path);

}  // namespace mmarc
