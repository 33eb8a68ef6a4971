#include "radsynth/neuralcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radsynth/common/rng.hpp"

namespace radsynth::nn {

double mse_loss(const Tensor4& prediction, const Tensor4& target) {
    if (prediction.shape() != target.shape()) throw std::invalid_argument("mse_loss: shape mismatch");
    const auto& p = prediction.values();
    const auto& q = target.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - q[i];
        acc += d * d;
    }
    return acc / static_cast<double>(p.size());
}

Tensor4 mse_loss_grad(const Tensor4& prediction, const Tensor4& target) {
    if (prediction.shape() != target.shape()) throw std::invalid_argument("mse_loss_grad: shape mismatch");
    Tensor4 g(prediction.shape());
    const auto& p = prediction.values();
    const auto& q = target.values();
    const double scale = 2.0 / static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) g.values()[i] = scale * (p[i] - q[i]);
    return g;
}

GradCheckResult gradient_check(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                               const GradCheckOptions& options) {
    if (options.sample_count == 0) {
        throw std::invalid_argument("gradient_check: sample_count must be >= 1");
    }
    Rng rng(options.seed);
    Tensor4 target(x_t.shape());
    for (auto& v : target.values()) v = rng.normal();

    const Tensor4 prediction = denoiser_forward(model, x_t, t);
    const ParamSet analytic = denoiser_backward(model, x_t, t, mse_loss_grad(prediction, target));

    DenoiserModel probe = model;
    const std::size_t total = model.params().total_size();
    GradCheckResult result;
    for (std::size_t s = 0; s < options.sample_count; ++s) {
        std::size_t flat = rng.index(total);
        std::size_t k = 0;
        while (flat >= probe.params().all()[k].size()) {
            flat -= probe.params().all()[k].size();
            ++k;
        }
        double& theta = probe.params().all()[k].values[flat];
        const double original = theta;
        theta = original + options.step;
        const double up = mse_loss(denoiser_forward(probe, x_t, t), target);
        theta = original - options.step;
        const double down = mse_loss(denoiser_forward(probe, x_t, t), target);
        theta = original;

        const double numeric = (up - down) / (2.0 * options.step);
        const double exact = analytic.all()[k].values[flat];
        const double denom = std::max({std::abs(exact), std::abs(numeric), options.magnitude_floor});
        result.max_relative_error = std::max(result.max_relative_error, std::abs(exact - numeric) / denom);
        ++result.checked;
    }
    return result;
}

}  // namespace radsynth::nn
