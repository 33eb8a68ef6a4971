#pragma once

#include <cstdint>
#include <vector>

#include "radsynth/neuralcore/denoiser.hpp"
#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::nn {

struct AdamHyper {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    bool operator==(const AdamHyper&) const = default;
};

struct OptimizerState {
    AdamHyper hyper;
    std::uint64_t timestep = 0;
    ParamSet first_moment;
    ParamSet second_moment;

    static OptimizerState for_params(const ParamSet& params, const AdamHyper& hyper);
    bool operator==(const OptimizerState&) const = default;
};

/// Bias-corrected adaptive-moment update of params in place:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
void adam_step(ParamSet& params, const ParamSet& grads, OptimizerState& state);

/// Same, and bumps model.step_count.
void adam_step(DenoiserModel& model, const ParamSet& grads, OptimizerState& state);

}  // namespace radsynth::nn
