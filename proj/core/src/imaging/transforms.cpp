#include "radsynth/imaging/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radsynth::imaging {

GrayImage resample(const GrayImage& img, int target_w, int target_h) {
    if (img.empty()) {
        throw std::invalid_argument("resample: zero-dimension input");
    }
    if (target_w < 1 || target_h < 1) {
        throw std::invalid_argument("resample: target dimensions must be >= 1");
    }
    const int sw = img.width();
    const int sh = img.height();
    const double scale_x = static_cast<double>(sw) / target_w;
    const double scale_y = static_cast<double>(sh) / target_h;

    GrayImage out(target_w, target_h);
    out.meta = img.meta;
    for (int y = 0; y < target_h; ++y) {
        const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fy = sy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, sw - 1);
            const double fx = sx - x0;
            const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
            const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
            out.at(x, y) = to_gray(top * (1.0 - fy) + bottom * fy);
        }
    }
    return out;
}

GrayImage invert(const GrayImage& img) {
    GrayImage out = img;
    for (auto& p : out.pixels()) {
        p = static_cast<std::uint8_t>(255 - p);
    }
    out.meta.inverted = !img.meta.inverted.value_or(false);
    return out;
}

RegionMeans region_means(const GrayImage& img) {
    if (img.empty()) {
        throw std::invalid_argument("detect_negative: empty image");
    }
    const int w = img.width();
    const int h = img.height();
    // Center window [w/4, w - w/4) keeps at least one pixel for tiny images.
    const int cx0 = w / 4;
    const int cx1 = std::max(cx0 + 1, w - w / 4);
    const int cy0 = h / 4;
    const int cy1 = std::max(cy0 + 1, h - h / 4);
    const int bw = std::max(1, static_cast<int>(std::lround(0.1 * w)));
    const int bh = std::max(1, static_cast<int>(std::lround(0.1 * h)));

    double center_sum = 0.0;
    double border_sum = 0.0;
    long center_n = 0;
    long border_n = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double p = img.at(x, y);
            if (x >= cx0 && x < cx1 && y >= cy0 && y < cy1) {
                center_sum += p;
                ++center_n;
            }
            if (x < bw || x >= w - bw || y < bh || y >= h - bh) {
                border_sum += p;
                ++border_n;
            }
        }
    }
    return {center_sum / static_cast<double>(center_n), border_sum / static_cast<double>(border_n)};
}

bool detect_negative(const GrayImage& img) {
    const RegionMeans means = region_means(img);
    return means.border > means.center;
}

GrayImage mirror(const GrayImage& img) {
    GrayImage out = img;
    const int w = img.width();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < w; ++x) {
            out.at(x, y) = img.at(w - 1 - x, y);
        }
    }
    return out;
}

OrientationResult standardize_orientation(const GrayImage& img, Facing facing) {
    switch (facing) {
        case Facing::Right: {
            GrayImage out = mirror(img);
            out.meta.facing = Facing::Left;
            return {std::move(out), false};
        }
        case Facing::Left: {
            GrayImage out = img;
            out.meta.facing = Facing::Left;
            return {std::move(out), false};
        }
        case Facing::Unknown:
            break;
    }
    GrayImage out = img;
    out.meta.facing = Facing::Unknown;
    return {std::move(out), true};
}

}  // namespace radsynth::imaging
