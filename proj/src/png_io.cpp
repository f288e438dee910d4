#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>

#include "mmarc/render.hpp"

namespace mmarc {

namespace {

struct ByteSink {
    std::vector<std::uint8_t>* out;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
    auto* sink = static_cast<ByteSink*>(png_get_io_ptr(png));
    sink->out->insert(sink->out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

struct ByteSource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_from_vector(png_structp png, png_bytep out, png_size_t len) {
    auto* src = static_cast<ByteSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->size) {
        png_error(png, "png source truncated");
    }
    std::memcpy(out, src->data + src->pos, len);
    src->pos += len;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw Error(ErrorCode::Malformed, "image buffer does not match its dimensions");
    }

    std::vector<std::uint8_t> out;
    std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        row_ptrs[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3);
    }

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "libpng allocation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "png encode failed");
    }

    ByteSink sink{&out};
    png_set_write_fn(png, &sink, png_write_to_vector, png_flush_noop);
    // Fixed filter and level keep output bytes deterministic for fixed input.
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw Error(ErrorCode::Malformed, "not a PNG stream");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::IoError, "libpng allocation failed");
    }

    Image img;
    std::vector<png_bytep> row_ptrs;
    ByteSource src{bytes.data(), bytes.size(), 0};

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::Malformed, "png decode failed");
    }

    png_set_read_fn(png, &src, png_read_from_vector);
    png_read_info(png, info);

    // Normalize anything lossless-compatible to 8-bit RGB.
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::Malformed, "png is not reducible to 8-bit RGB");
    }

    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    row_ptrs.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        row_ptrs[y] = img.pixels.data() + static_cast<std::size_t>(y) * width * 3;
    }
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png_file(const std::string& path, const Image& img) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path);
    }
}

Image read_png_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace mmarc
