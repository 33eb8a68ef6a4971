#pragma once

#include <span>
#include <vector>

#include "radsynth/neuralcore/tensor.hpp"

namespace radsynth::diffusion {

/// Per-step variances beta_t, alpha_t = 1 - beta_t and the cumulative
/// products alpha_bar_t, indexed t = 1..T.
class NoiseSchedule {
public:
    /// Throws std::invalid_argument unless every beta lies in (0, 1).
    static NoiseSchedule from_betas(std::vector<double> betas);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const { return beta_.at(static_cast<std::size_t>(t - 1)); }
    double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t - 1)); }
    double alpha_bar(int t) const { return alpha_bar_.at(static_cast<std::size_t>(t - 1)); }

    const std::vector<double>& betas() const { return beta_; }
    const std::vector<double>& alpha_bars() const { return alpha_bar_; }

private:
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
};

/// beta_t linear from beta_start (t=1) to beta_end (t=T), endpoints included.
/// Requires T >= 2 and 0 < beta_start <= beta_end < 1.
NoiseSchedule linear_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

/// x_t = sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) eps
double q_sample_value(double x0, double eps, double alpha_bar);

/// Closed-form forward process; one t per batch item.
nn::Tensor4 q_sample(const nn::Tensor4& x0, std::span<const int> t, const nn::Tensor4& eps,
                     const NoiseSchedule& sched);

/// x_{t-1} = (x_t - beta / sqrt(1 - alpha_bar) * eps_hat) / sqrt(alpha) + sigma z
double p_sample_value(double x_t, double eps_hat, double alpha, double beta, double alpha_bar, double sigma,
                      double z);

/// Ancestral update with sigma_t^2 = beta_t. z may be null (no noise); it is
/// ignored at t == 1.
nn::Tensor4 p_sample_step(const nn::Tensor4& x_t, int t, const nn::Tensor4& eps_hat, const NoiseSchedule& sched,
                          const nn::Tensor4* z);

}  // namespace radsynth::diffusion
