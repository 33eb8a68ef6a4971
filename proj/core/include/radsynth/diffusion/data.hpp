#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "radsynth/imaging/gray_image.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::diffusion {

/// Gray level p maps to p / 127.5 - 1.
double pixel_to_unit(std::uint8_t p);
/// Clamp to [-1, 1], then affine to [0, 255] with round-half-up.
std::uint8_t unit_to_pixel(double v);

/// Stacks same-size images into an (n, 1, h, w) tensor in [-1, 1].
nn::Tensor4 images_to_tensor(std::span<const imaging::GrayImage> images);
nn::Tensor4 images_to_tensor(std::span<const imaging::GrayImage* const> images);
std::vector<imaging::GrayImage> tensor_to_images(const nn::Tensor4& x);

/// Deterministic seeded partition. The validation part has
/// round-half-up(n * val_fraction) items; val_fraction may be 0.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};
SplitIndices split_indices(std::size_t n, double val_fraction, std::uint64_t seed);

std::pair<std::vector<imaging::ManifestEntry>, std::vector<imaging::ManifestEntry>> train_val_split(
    const imaging::DatasetManifest& manifest, double val_fraction, std::uint64_t seed);

/// Seeded Fisher-Yates, portable across standard libraries.
template <typename T, typename R>
void shuffle_in_place(std::vector<T>& items, R& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.index(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace radsynth::diffusion
