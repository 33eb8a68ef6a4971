#include "radsynth/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace radsynth::diffusion {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
    if (betas.empty()) throw std::invalid_argument("NoiseSchedule: no steps");
    NoiseSchedule s;
    double running = 1.0;
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) {
            throw std::invalid_argument("NoiseSchedule: beta " + std::to_string(b) + " outside (0, 1)");
        }
        s.alpha_.push_back(1.0 - b);
        running *= 1.0 - b;
        s.alpha_bar_.push_back(running);
    }
    s.beta_ = std::move(betas);
    return s;
}

NoiseSchedule linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 2) throw std::invalid_argument("linear_schedule: T must be >= 2");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw std::invalid_argument("linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int t = 1; t <= steps; ++t) {
        betas[static_cast<std::size_t>(t - 1)] =
            beta_start + (beta_end - beta_start) * static_cast<double>(t - 1) / static_cast<double>(steps - 1);
    }
    return NoiseSchedule::from_betas(std::move(betas));
}

double q_sample_value(double x0, double eps, double alpha_bar) {
    return std::sqrt(alpha_bar) * x0 + std::sqrt(1.0 - alpha_bar) * eps;
}

nn::Tensor4 q_sample(const nn::Tensor4& x0, std::span<const int> t, const nn::Tensor4& eps,
                     const NoiseSchedule& sched) {
    if (eps.shape() != x0.shape()) throw std::invalid_argument("q_sample: eps shape != x0 shape");
    if (t.size() != x0.shape().n) throw std::invalid_argument("q_sample: need one t per batch item");
    nn::Tensor4 out(x0.shape());
    for (std::size_t n = 0; n < x0.shape().n; ++n) {
        if (t[n] < 1 || t[n] > sched.steps()) throw std::invalid_argument("q_sample: t out of range");
        const double ab = sched.alpha_bar(t[n]);
        const auto src = x0.item(n);
        const auto noise = eps.item(n);
        auto dst = out.item(n);
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = q_sample_value(src[i], noise[i], ab);
    }
    return out;
}

double p_sample_value(double x_t, double eps_hat, double alpha, double beta, double alpha_bar, double sigma,
                      double z) {
    return (x_t - beta / std::sqrt(1.0 - alpha_bar) * eps_hat) / std::sqrt(alpha) + sigma * z;
}

nn::Tensor4 p_sample_step(const nn::Tensor4& x_t, int t, const nn::Tensor4& eps_hat, const NoiseSchedule& sched,
                          const nn::Tensor4* z) {
    if (t < 1 || t > sched.steps()) throw std::invalid_argument("p_sample_step: t out of range");
    if (eps_hat.shape() != x_t.shape()) throw std::invalid_argument("p_sample_step: eps_hat shape mismatch");
    const bool use_noise = z != nullptr && t > 1;
    if (use_noise && z->shape() != x_t.shape()) throw std::invalid_argument("p_sample_step: z shape mismatch");
    const double alpha = sched.alpha(t);
    const double beta = sched.beta(t);
    const double alpha_bar = sched.alpha_bar(t);
    const double sigma = std::sqrt(beta);
    nn::Tensor4 out(x_t.shape());
    const auto& xs = x_t.values();
    const auto& es = eps_hat.values();
    auto& os = out.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        os[i] = p_sample_value(xs[i], es[i], alpha, beta, alpha_bar, sigma, use_noise ? z->values()[i] : 0.0);
    }
    return out;
}

}  // namespace radsynth::diffusion
