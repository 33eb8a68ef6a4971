#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radsynth/imaging/gray_image.hpp"

namespace radsynth::imaging {

/// 8-bit grayscale PNG. Gray+alpha, palette, 16-bit and RGB inputs are
/// reduced to 8-bit gray on read.
GrayImage read_png(const std::filesystem::path& path);
void write_png(const GrayImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const GrayImage& img);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

/// Binary PGM (P5, maxval 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

/// Dispatches on the file's magic bytes (PNG or P5).
GrayImage read_image(const std::filesystem::path& path);

}  // namespace radsynth::imaging
