#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace radsynth::imaging {

enum class Origin { Real, Synthetic };
enum class Facing { Left, Right, Unknown };

std::string to_string(Origin origin);
std::string to_string(Facing facing);
Origin parse_origin(const std::string& text);
Facing parse_facing(const std::string& text);

struct ImageMeta {
    std::string source_id;
    Origin origin = Origin::Real;
    std::optional<int> checkpoint;
    Facing facing = Facing::Unknown;
    std::optional<bool> inverted;

    bool operator==(const ImageMeta&) const = default;
};

/// 8-bit single-channel raster, row-major. Storage type bounds every
/// intensity to [0, 255].
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    const std::vector<std::uint8_t>& pixels() const { return pixels_; }
    std::vector<std::uint8_t>& pixels() { return pixels_; }

    ImageMeta meta;

    /// Pixel equality; metadata is ignored.
    bool same_pixels(const GrayImage& other) const {
        return width_ == other.width_ && height_ == other.height_ && pixels_ == other.pixels_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Round-half-up to the nearest gray level, clamped to [0, 255].
std::uint8_t to_gray(double value);

}  // namespace radsynth::imaging
