#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "radsynth/imaging/gray_image.hpp"
#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::eval {

/// Fixed random-feature image embedder: three 3x3 stride-2 convolutions with
/// SiLU, then global average pooling. Weights are a pure function of the seed.
/// Channel widths are out_dim/4, out_dim/2, out_dim.
class Embedder {
public:
    explicit Embedder(std::uint64_t seed, std::size_t out_dim = 64);

    std::uint64_t seed() const { return seed_; }
    std::size_t out_dim() const { return out_dim_; }

    /// One row per image. Images must share one size, at least 8x8.
    Eigen::MatrixXd embed(std::span<const imaging::GrayImage> images) const;
    std::vector<double> embed_one(const imaging::GrayImage& image) const;

private:
    struct Layer {
        std::size_t in_ch;
        std::size_t out_ch;
        std::vector<double> weights;
        std::vector<double> bias;
    };
    nn::Tensor4 features(const nn::Tensor4& x) const;

    std::uint64_t seed_;
    std::size_t out_dim_;
    std::vector<Layer> layers_;
};

/// Feature matrix for an image set, row i = embedding of images[i].
Eigen::MatrixXd embed_set(std::span<const imaging::GrayImage> images, const Embedder& embedder);

}  // namespace radsynth::eval
