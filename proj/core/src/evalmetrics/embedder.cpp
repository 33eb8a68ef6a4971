#include "radsynth/evalmetrics/embedder.hpp"

#include <cmath>
#include <stdexcept>

#include "radsynth/common/rng.hpp"
#include "radsynth/diffusion/data.hpp"
#include "radsynth/neuralcore/layers.hpp"

namespace radsynth::eval {

Embedder::Embedder(std::uint64_t seed, std::size_t out_dim) : seed_(seed), out_dim_(out_dim) {
    if (out_dim < 4 || out_dim % 4 != 0) {
        throw std::invalid_argument("Embedder: out_dim must be a positive multiple of 4");
    }
    const std::size_t widths[] = {1, out_dim / 4, out_dim / 2, out_dim};
    Rng rng(seed);
    for (std::size_t l = 0; l < 3; ++l) {
        Layer layer{widths[l], widths[l + 1], {}, {}};
        const double limit = std::sqrt(6.0 / static_cast<double>(9 * (layer.in_ch + layer.out_ch)));
        layer.weights.resize(layer.out_ch * layer.in_ch * 9);
        for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
        layer.bias.resize(layer.out_ch);
        for (auto& b : layer.bias) b = rng.uniform(-0.1, 0.1);
        layers_.push_back(std::move(layer));
    }
}

nn::Tensor4 Embedder::features(const nn::Tensor4& x) const {
    nn::Tensor4 h = x;
    for (const auto& layer : layers_) {
        const nn::ConvGeometry geom{layer.in_ch, layer.out_ch, 3, 2, 1};
        h = nn::activate(nn::conv2d(h, layer.weights, layer.bias, geom), nn::Activation::SiLU);
    }
    return h;
}

Eigen::MatrixXd Embedder::embed(std::span<const imaging::GrayImage> images) const {
    if (images.empty()) return Eigen::MatrixXd(0, static_cast<Eigen::Index>(out_dim_));
    const int w = images.front().width();
    const int h = images.front().height();
    if (w < 8 || h < 8) throw std::invalid_argument("Embedder: images must be at least 8x8");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(out_dim_));
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < images.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, images.size() - start);
        const nn::Tensor4 feats = features(diffusion::images_to_tensor(images.subspan(start, count)));
        const auto& s = feats.shape();
        for (std::size_t n = 0; n < count; ++n) {
            for (std::size_t c = 0; c < s.c; ++c) {
                double acc = 0.0;
                for (std::size_t y = 0; y < s.h; ++y)
                    for (std::size_t x = 0; x < s.w; ++x) acc += feats.at(n, c, y, x);
                out(static_cast<Eigen::Index>(start + n), static_cast<Eigen::Index>(c)) =
                    acc / static_cast<double>(s.plane());
            }
        }
    }
    return out;
}

std::vector<double> Embedder::embed_one(const imaging::GrayImage& image) const {
    const Eigen::MatrixXd m = embed(std::span<const imaging::GrayImage>(&image, 1));
    return {m.data(), m.data() + m.size()};
}

Eigen::MatrixXd embed_set(std::span<const imaging::GrayImage> images, const Embedder& embedder) {
    return embedder.embed(images);
}

}  // namespace radsynth::eval
