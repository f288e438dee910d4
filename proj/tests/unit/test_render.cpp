#include "doctest.h"

#include "mmarc/render.hpp"
#include "support/synthetic.hpp"

using namespace mmarc;
using mmarc::testsupport::random_grid;

TEST_CASE("single cell renders as a solid block") {
    RenderConfig cfg;  // cell 30, line 2
    const Grid g = Grid::from_rows({{0}});
    const Image img = render_grid(g, cfg);
    CHECK(img.width == 30);
    CHECK(img.height == 30);
    const Rgb black = cfg.palette.entries[0].color;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            REQUIRE(img.at(x, y) == black);
        }
    }
}

TEST_CASE("2x2 geometry and divider color") {
    RenderConfig cfg;
    const Grid g = Grid::from_rows({{1, 2}, {3, 4}});
    const Image img = render_grid(g, cfg);
    // 2 cells of 30px + 1 divider of 2px per axis.
    CHECK(img.width == 2 * 30 + 1 * 2);
    CHECK(img.height == 62);
    CHECK(img.at(30, 15) == kDividerColor);
    CHECK(img.at(31, 15) == kDividerColor);
    CHECK(img.at(15, 30) == kDividerColor);
}

TEST_CASE("cell centers carry the palette color") {
    RenderConfig cfg;
    const Grid g = Grid::from_rows({{1, 2}});
    const Image img = render_grid(g, cfg);
    CHECK(img.at(15, 15) == cfg.palette.entries[1].color);
    CHECK(img.at(32 + 15, 15) == cfg.palette.entries[2].color);
}

TEST_CASE("visual round trip across configurations") {
    Rng rng(21);
    std::vector<RenderConfig> configs(3);
    configs[1].cell_px = 8;
    configs[1].line_px = 1;
    configs[2].outer_border = true;
    for (const RenderConfig& cfg : configs) {
        for (int trial = 0; trial < 25; ++trial) {
            const Grid g = random_grid(rng, 12);
            CHECK(decode_image(render_grid(g, cfg), cfg) == g);
        }
    }
}

TEST_CASE("decode geometry mismatch") {
    RenderConfig cfg;
    Image img;
    img.width = 61;  // fits no integer column count under cell 30 / line 2
    img.height = 62;
    img.pixels.assign(static_cast<std::size_t>(61) * 62 * 3, 0);
    CHECK_THROWS_WITH_AS(decode_image(img, cfg), doctest::Contains("width"), Error);
}

TEST_CASE("decode color mismatch on mid-gray") {
    RenderConfig cfg;
    Image img;
    img.width = 30;
    img.height = 30;
    img.pixels.assign(static_cast<std::size_t>(30) * 30 * 3, 128);
    try {
        decode_image(img, cfg);
        FAIL("expected ColorMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ColorMismatch);
    }
}

TEST_CASE("palette and config validation") {
    Palette p = Palette::standard();
    p.validate();
    CHECK(p.decode_tolerance() > 0);

    Palette dup = Palette::standard();
    dup.entries[3].color = dup.entries[2].color;
    CHECK_THROWS_AS(dup.validate(), Error);

    Palette white = Palette::standard();
    white.entries[5].color = kDividerColor;
    CHECK_THROWS_AS(white.validate(), Error);

    RenderConfig small;
    small.cell_px = 3;
    CHECK_THROWS_AS(small.validate(), Error);
    RenderConfig thin;
    thin.line_px = 0;
    CHECK_THROWS_AS(thin.validate(), Error);
    RenderConfig cramped;
    cramped.cell_px = 6;
    cramped.line_px = 3;
    CHECK_THROWS_AS(cramped.validate(), Error);
}

TEST_CASE("color legend text") {
    const std::string legend = color_legend_text(Palette::standard());
    CHECK(legend ==
          "[0:black; 1:blue; 2:red; 3:green; 4:yellow; 5:grey; 6:pink; 7:orange; "
          "8:light blue; 9:brown]");
    std::size_t entries = 0;
    for (std::size_t pos = 0; (pos = legend.find(':', pos)) != std::string::npos; ++pos) ++entries;
    CHECK(entries == 10);
    for (const auto& entry : Palette::standard().entries) {
        CHECK(legend.find(entry.name) != std::string::npos);
    }
}

TEST_CASE("png round trip is lossless and deterministic") {
    Rng rng(5);
    RenderConfig cfg;
    cfg.cell_px = 6;
    cfg.line_px = 1;
    for (int trial = 0; trial < 10; ++trial) {
        const Grid g = random_grid(rng, 10);
        const Image img = render_grid(g, cfg);
        const auto bytes1 = encode_png(img);
        const auto bytes2 = encode_png(img);
        CHECK(bytes1 == bytes2);
        CHECK(decode_png(bytes1) == img);
        CHECK(decode_image(decode_png(bytes1), cfg) == g);
    }
}

TEST_CASE("png file io") {
    testsupport::TempDir dir("png");
    RenderConfig cfg;
    Rng rng(8);
    const Grid g = random_grid(rng, 5);
    const Image img = render_grid(g, cfg);
    const std::string path = (dir.path() / "g.png").string();
    write_png_file(path, img);
    CHECK(read_png_file(path) == img);
    CHECK_THROWS_AS(read_png_file((dir.path() / "missing.png").string()), Error);
    testsupport::write_file(dir.path() / "junk.png", "not a png");
    CHECK_THROWS_AS(read_png_file((dir.path() / "junk.png").string()), Error);
}
