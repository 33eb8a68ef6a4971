#include "radsynth/diffusion/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "radsynth/common/rng.hpp"

namespace radsynth::diffusion {

double pixel_to_unit(std::uint8_t p) {
    return static_cast<double>(p) / 127.5 - 1.0;
}

std::uint8_t unit_to_pixel(double v) {
    return imaging::to_gray((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
}

nn::Tensor4 images_to_tensor(std::span<const imaging::GrayImage* const> images) {
    if (images.empty()) throw std::invalid_argument("images_to_tensor: no images");
    const int w = images.front()->width();
    const int h = images.front()->height();
    nn::Tensor4 x(nn::Shape4{images.size(), 1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const auto& img = *images[n];
        if (img.width() != w || img.height() != h) {
            throw std::invalid_argument("images_to_tensor: images must share one size");
        }
        auto dst = x.item(n);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = pixel_to_unit(img.pixels()[i]);
    }
    return x;
}

nn::Tensor4 images_to_tensor(std::span<const imaging::GrayImage> images) {
    std::vector<const imaging::GrayImage*> refs;
    refs.reserve(images.size());
    for (const auto& img : images) refs.push_back(&img);
    return images_to_tensor(std::span<const imaging::GrayImage* const>(refs));
}

std::vector<imaging::GrayImage> tensor_to_images(const nn::Tensor4& x) {
    const auto& s = x.shape();
    if (s.c != 1) throw std::invalid_argument("tensor_to_images: expected one channel");
    std::vector<imaging::GrayImage> out;
    for (std::size_t n = 0; n < s.n; ++n) {
        imaging::GrayImage img(static_cast<int>(s.w), static_cast<int>(s.h));
        const auto src = x.item(n);
        for (std::size_t i = 0; i < src.size(); ++i) img.pixels()[i] = unit_to_pixel(src[i]);
        out.push_back(std::move(img));
    }
    return out;
}

SplitIndices split_indices(std::size_t n, double val_fraction, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("train_val_split: empty dataset");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("train_val_split: val_fraction must lie in [0, 1)");
    }
    // The 1e-9 guard keeps exact halves (10 * 0.15 = 1.5) rounding up despite
    // binary representation error.
    const auto val_count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * val_fraction + 0.5 + 1e-9));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle_in_place(order, rng);
    SplitIndices out;
    out.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

std::pair<std::vector<imaging::ManifestEntry>, std::vector<imaging::ManifestEntry>> train_val_split(
    const imaging::DatasetManifest& manifest, double val_fraction, std::uint64_t seed) {
    const auto split = split_indices(manifest.entries.size(), val_fraction, seed);
    std::vector<imaging::ManifestEntry> train;
    std::vector<imaging::ManifestEntry> val;
    for (auto i : split.train) train.push_back(manifest.entries[i]);
    for (auto i : split.val) val.push_back(manifest.entries[i]);
    return {std::move(train), std::move(val)};
}

}  // namespace radsynth::diffusion
