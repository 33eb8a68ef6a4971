#pragma once

#include <cstdint>
#include <span>

#include "radsynth/neuralcore/denoiser.hpp"

namespace radsynth::nn {

struct GradCheckOptions {
    std::size_t sample_count = 200;
    double step = 1e-5;
    std::uint64_t seed = 0;
    /// Denominator floor. Central differences at step 1e-5 carry ~1e-10 of
    /// absolute round-off, so gradients below this are judged on an
    /// absolute error of magnitude_floor * tolerance.
    double magnitude_floor = 1e-5;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

/// Compares analytic gradients of L = mean((eps_hat - target)^2) against
/// central finite differences on randomly chosen scalar parameters. The
/// target is a seeded unit-Gaussian tensor. Relative error per parameter is
/// |a - n| / max(|a|, |n|, magnitude_floor).
///
/// Throws std::invalid_argument when sample_count == 0.
GradCheckResult gradient_check(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                               const GradCheckOptions& options);

/// Scalar MSE used by gradient_check, and its gradient w.r.t. the prediction.
double mse_loss(const Tensor4& prediction, const Tensor4& target);
Tensor4 mse_loss_grad(const Tensor4& prediction, const Tensor4& target);

}  // namespace radsynth::nn
