#include "radsynth/imaging/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "radsynth/common/rng.hpp"

namespace radsynth::imaging {
namespace {

struct RoundedRect {
    double cx, cy;
    double half_w, half_h;
    double radius;
    double cos_t, sin_t;
    double brightness;

    bool contains(double px, double py) const {
        const double dx = px - cx;
        const double dy = py - cy;
        const double lx = std::abs(cos_t * dx + sin_t * dy);
        const double ly = std::abs(-sin_t * dx + cos_t * dy);
        const double qx = lx - (half_w - radius);
        const double qy = ly - (half_h - radius);
        const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
        const double inside = std::min(std::max(qx, qy), 0.0);
        return outside + inside - radius <= 0.0;
    }
};

constexpr int kSuper = 4;

GrayImage make_one(int size, Rng& rng) {
    const double s = size;
    const double background = rng.uniform(10.0, 35.0);
    const int count = static_cast<int>(rng.integer(4, 7));
    const double top = s * rng.uniform(0.06, 0.14);
    const double bottom = s * rng.uniform(0.86, 0.94);
    const double pitch = (bottom - top) / count;
    const double column_x = s * (0.55 + rng.uniform(-0.07, 0.07));
    const double drift = s * rng.uniform(-0.02, 0.02);
    const double tilt = rng.uniform(-0.3, 0.3);
    const double contrast = rng.uniform(150.0, 235.0);
    const double fill = rng.uniform(0.55, 0.78);

    std::vector<RoundedRect> bodies;
    for (int i = 0; i < count; ++i) {
        RoundedRect r{};
        r.cx = column_x + drift * (i - count / 2.0) + s * rng.uniform(-0.015, 0.015);
        r.cy = top + pitch * (i + 0.5) + pitch * rng.uniform(-0.06, 0.06);
        r.half_w = s * rng.uniform(0.13, 0.2);
        r.half_h = 0.5 * pitch * fill;
        r.radius = 0.35 * std::min(r.half_w, r.half_h);
        const double theta = tilt + rng.uniform(-0.08, 0.08);
        r.cos_t = std::cos(theta);
        r.sin_t = std::sin(theta);
        r.brightness = std::clamp(contrast + rng.uniform(-15.0, 15.0), 0.0, 255.0);
        bodies.push_back(r);
    }

    // Anterior soft tissue: a dim vertical band left of the column.
    const double tissue_x0 = column_x - s * rng.uniform(0.38, 0.45);
    const double tissue_x1 = column_x - s * rng.uniform(0.22, 0.27);
    const double tissue_level = rng.uniform(45.0, 80.0);

    GrayImage img(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < kSuper; ++sy) {
                for (int sx = 0; sx < kSuper; ++sx) {
                    const double px = x + (sx + 0.5) / kSuper;
                    const double py = y + (sy + 0.5) / kSuper;
                    double value = background;
                    if (px >= tissue_x0 && px <= tissue_x1) value = tissue_level;
                    for (const auto& body : bodies) {
                        if (body.contains(px, py)) {
                            value = body.brightness;
                            break;
                        }
                    }
                    acc += value;
                }
            }
            const double noise = 3.0 * rng.normal();
            img.at(x, y) = to_gray(acc / (kSuper * kSuper) + noise);
        }
    }

    // Guarantee at least 100 gray levels of dynamic range.
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const int lo = *lo_it;
    const int hi = *hi_it;
    if (hi - lo < 100) {
        const double gain = 120.0 / std::max(1, hi - lo);
        for (auto& p : img.pixels()) {
            p = to_gray(lo + (p - lo) * gain);
        }
    }
    return img;
}

}  // namespace

std::vector<GrayImage> make_phantom_set(int n, int size, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("make_phantom_set: n must be >= 1");
    if (size < 8) throw std::invalid_argument("make_phantom_set: size must be >= 8");
    std::vector<GrayImage> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(i));
        GrayImage img = make_one(size, rng);
        char id[64];
        std::snprintf(id, sizeof id, "phantom_%05d", i);
        img.meta.source_id = id;
        img.meta.origin = Origin::Real;
        img.meta.facing = Facing::Left;
        img.meta.inverted = false;
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace radsynth::imaging
