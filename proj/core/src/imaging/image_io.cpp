#include "radsynth/imaging/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "radsynth/common/digest.hpp"

namespace radsynth::imaging {
namespace {

[[noreturn]] void png_error_handler(png_structp, png_const_charp message) {
    throw std::runtime_error(std::string("png: ") + message);
}

void png_warning_handler(png_structp, png_const_charp) {}

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t count) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + count > cursor->bytes.size()) {
        png_error(png, "truncated stream");
    }
    std::memcpy(out, cursor->bytes.data() + cursor->offset, count);
    cursor->offset += count;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    if (img.empty()) {
        throw std::invalid_argument("encode_png: empty image");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                              png_warning_handler);
    if (!png) {
        throw std::runtime_error("png: cannot create write struct");
    }
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    try {
        if (!info) {
            throw std::runtime_error("png: cannot create info struct");
        }
        png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                     static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height(); ++y) {
            auto* row = const_cast<png_bytep>(img.pixels().data() + static_cast<std::size_t>(y) * img.width());
            png_write_row(png, row);
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw std::runtime_error("png: bad signature");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                             png_warning_handler);
    if (!png) {
        throw std::runtime_error("png: cannot create read struct");
    }
    png_infop info = png_create_info_struct(png);
    ReadCursor cursor{bytes, 0};
    GrayImage result;
    try {
        if (!info) {
            throw std::runtime_error("png: cannot create info struct");
        }
        png_set_read_fn(png, &cursor, png_read_from_span);
        png_read_info(png, info);
        const auto width = png_get_image_width(png, info);
        const auto height = png_get_image_height(png, info);
        const int color_type = png_get_color_type(png, info);
        const int bit_depth = png_get_bit_depth(png, info);

        if (bit_depth == 16) png_set_strip_16(png);
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
        if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
            color_type == PNG_COLOR_TYPE_PALETTE) {
            png_set_rgb_to_gray_fixed(png, 1, -1, -1);
        }
        png_read_update_info(png, info);
        if (png_get_channels(png, info) != 1) {
            throw std::runtime_error("png: could not reduce to a single channel");
        }

        std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * height);
        for (png_uint_32 y = 0; y < height; ++y) {
            png_read_row(png, pixels.data() + static_cast<std::size_t>(y) * width, nullptr);
        }
        png_read_end(png, nullptr);
        result = GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return result;
}

GrayImage read_png(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return decode_png(bytes);
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
    const auto bytes = encode_png(img);
    write_file_bytes(path, bytes);
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    auto next_token = [&]() {
        // Skip whitespace and '#' comments.
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        std::string token;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) {
            token.push_back(static_cast<char>(bytes[pos++]));
        }
        return token;
    };
    if (next_token() != "P5") {
        throw std::runtime_error("pgm: only binary P5 is supported: " + path.string());
    }
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255) {
        throw std::runtime_error("pgm: maxval must be 255: " + path.string());
    }
    ++pos;  // single whitespace after maxval
    const std::size_t count = static_cast<std::size_t>(width) * height;
    if (width < 1 || height < 1 || pos + count > bytes.size()) {
        throw std::runtime_error("pgm: truncated raster: " + path.string());
    }
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + count));
    return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ostringstream header;
    header << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    const std::string head = header.str();
    std::vector<std::uint8_t> bytes(head.begin(), head.end());
    bytes.insert(bytes.end(), img.pixels().begin(), img.pixels().end());
    write_file_bytes(path, bytes);
}

GrayImage read_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open image " + path.string());
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] == 'P' && magic[1] == '5') {
        return read_pgm(path);
    }
    return read_png(path);
}

}  // namespace radsynth::imaging
