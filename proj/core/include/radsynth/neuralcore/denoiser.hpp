#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radsynth/neuralcore/layers.hpp"
#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::nn {

/// Encoder-decoder noise predictor.
///
///   in      conv3x3  in_ch -> ch(0)              + time bias, act
///   down_l  conv3x3/2 ch(l-1) -> ch(l), l=1..L   + time bias, act
///   mid     conv3x3  ch(L) -> ch(L)              + time bias, act
///   up_l    nearest 2x, conv3x3 ch(l+1) -> ch(l), act         l=L-1..0
///   merge_l conv3x3 [up_l, skip_l] -> ch(l)      + time bias, act
///   out     conv3x3  ch(0) -> in_ch
///
/// ch(l) = base_channels * 2^l. The time bias of every "+ time bias" layer
/// is a slice of one dense projection of the sinusoidal embedding of t.
struct DenoiserArch {
    std::uint32_t base_channels = 16;
    std::uint32_t num_down_levels = 2;
    std::uint32_t time_embed_dim = 32;
    std::uint32_t in_channels = 1;
    Activation activation = Activation::SiLU;
    std::uint32_t timesteps = 1000;  // largest accepted t

    std::size_t channels_at(std::size_t level) const { return std::size_t{base_channels} << level; }
    bool operator==(const DenoiserArch&) const = default;
};

struct InitOptions {
    std::uint64_t seed = 0;
    /// Zero the output conv so the initial prediction is exactly 0.
    bool zero_output = true;
};

class DenoiserModel {
public:
    DenoiserModel() = default;
    static DenoiserModel create(const DenoiserArch& arch, const InitOptions& init);

    const DenoiserArch& arch() const { return arch_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    std::uint64_t step_count = 0;

    /// Offsets of each time-biased layer inside the dense projection output.
    struct TimeSlots {
        std::size_t in = 0;
        std::vector<std::size_t> down;   // index l-1 for level l
        std::size_t mid = 0;
        std::vector<std::size_t> merge;  // index l for level l
        std::size_t total = 0;
    };
    TimeSlots time_slots() const;

    /// Rebuilds from stored parameters; validates names and shapes.
    static DenoiserModel from_parts(const DenoiserArch& arch, ParamSet params, std::uint64_t step_count);

    bool operator==(const DenoiserModel&) const = default;

private:
    DenoiserArch arch_;
    ParamSet params_;
};

/// Parameter layout for an architecture (names and shapes, zero values).
ParamSet make_param_layout(const DenoiserArch& arch);

/// Intermediate values kept by the forward pass for backpropagation.
struct ForwardCache {
    struct Layer {
        Tensor4 input;
        Tensor4 pre;   // after conv (+ time bias), before activation
        Tensor4 post;  // after activation
    };
    std::vector<double> embedding;  // batch x time_embed_dim
    std::vector<double> time_bias;  // batch x slots.total
    Layer in;
    std::vector<Layer> down;
    Layer mid;
    std::vector<Layer> up;     // indexed by level
    std::vector<Layer> merge;  // indexed by level
    Tensor4 out_input;
    Tensor4 output;
};

/// Throws std::invalid_argument when spatial extents are not divisible by
/// 2^num_down_levels, channels mismatch, or any t lies outside [1, timesteps].
Tensor4 denoiser_forward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t);
Tensor4 denoiser_forward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                         ForwardCache& cache);

/// d loss / d theta for every parameter, given d loss / d output.
ParamSet denoiser_backward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                           const Tensor4& loss_grad);
ParamSet denoiser_backward(const DenoiserModel& model, const ForwardCache& cache, std::span<const int> t,
                           const Tensor4& loss_grad);

}  // namespace radsynth::nn
