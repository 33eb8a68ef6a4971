#include "radsynth/imaging/gray_image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radsynth::imaging {

std::string to_string(Origin origin) {
    return origin == Origin::Real ? "real" : "synthetic";
}

std::string to_string(Facing facing) {
    switch (facing) {
        case Facing::Left:
            return "left";
        case Facing::Right:
            return "right";
        case Facing::Unknown:
            break;
    }
    return "unknown";
}

Origin parse_origin(const std::string& text) {
    if (text == "real") return Origin::Real;
    if (text == "synthetic") return Origin::Synthetic;
    throw std::invalid_argument("unknown origin '" + text + "'");
}

Facing parse_facing(const std::string& text) {
    if (text == "left") return Facing::Left;
    if (text == "right") return Facing::Right;
    if (text == "unknown") return Facing::Unknown;
    throw std::invalid_argument("unknown facing '" + text + "'");
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("GrayImage: dimensions must be >= 1");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("GrayImage: dimensions must be >= 1");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * height) {
        throw std::invalid_argument("GrayImage: pixel count != width * height");
    }
}

std::uint8_t to_gray(double value) {
    const double rounded = std::floor(value + 0.5);
    return static_cast<std::uint8_t>(std::clamp(rounded, 0.0, 255.0));
}

}  // namespace radsynth::imaging
