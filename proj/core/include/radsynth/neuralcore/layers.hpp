#pragma once

#include <span>
#include <vector>

#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::nn {

/// Square-kernel 2-D cross-correlation with zero padding.
/// Weights are laid out [out_ch][in_ch][kernel][kernel].
struct ConvGeometry {
    std::size_t in_ch = 1;
    std::size_t out_ch = 1;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 1;

    std::size_t out_extent(std::size_t in) const;
    std::size_t weight_count() const { return out_ch * in_ch * kernel * kernel; }
};

/// Throws std::invalid_argument on channel or parameter-size mismatch,
/// stride 0, or a kernel larger than the padded input.
Tensor4 conv2d(const Tensor4& input, std::span<const double> weights, std::span<const double> bias,
               const ConvGeometry& geom);

/// Accumulates into grad_weights / grad_bias. grad_input is overwritten when
/// non-null.
void conv2d_backward(const Tensor4& input, std::span<const double> weights, const ConvGeometry& geom,
                     const Tensor4& grad_output, Tensor4* grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias);

enum class Activation { SiLU = 0, Identity = 1 };

double silu(double x);
double silu_derivative(double x);

Tensor4 activate(const Tensor4& pre, Activation act);
/// grad_pre = grad_post * act'(pre)
Tensor4 activate_backward(const Tensor4& pre, const Tensor4& grad_post, Activation act);

/// Nearest-neighbor 2x upsampling and its adjoint (2x2 block sums).
Tensor4 upsample2x(const Tensor4& input);
Tensor4 upsample2x_backward(const Tensor4& grad_output);

/// Channel concatenation [a, b] and its adjoint.
Tensor4 concat_channels(const Tensor4& a, const Tensor4& b);
void split_channels(const Tensor4& grad, std::size_t a_channels, Tensor4& grad_a, Tensor4& grad_b);

/// x[n][c] += bias[n * stride + offset + c] over every spatial position.
void add_channel_bias(Tensor4& x, std::span<const double> bias, std::size_t stride, std::size_t offset);
/// grad_bias[n * stride + offset + c] += sum over spatial positions of grad[n][c].
void channel_bias_backward(const Tensor4& grad, std::span<double> grad_bias, std::size_t stride,
                           std::size_t offset);

/// Sinusoidal embedding: sin(t f_i) for the first half, cos(t f_i) for the
/// second, with f_i = 10000^(-i / (dim/2)). dim must be even.
std::vector<double> timestep_embedding(int t, std::size_t dim);

}  // namespace radsynth::nn
