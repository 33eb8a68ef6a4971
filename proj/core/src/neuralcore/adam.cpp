#include "radsynth/neuralcore/adam.hpp"

#include <cmath>

namespace radsynth::nn {

OptimizerState OptimizerState::for_params(const ParamSet& params, const AdamHyper& hyper) {
    OptimizerState s;
    s.hyper = hyper;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, OptimizerState& state) {
    params.require_same_layout(grads);
    params.require_same_layout(state.first_moment);
    params.require_same_layout(state.second_moment);

    state.timestep += 1;
    const auto& h = state.hyper;
    const double t = static_cast<double>(state.timestep);
    const double correction1 = 1.0 - std::pow(h.beta1, t);
    const double correction2 = 1.0 - std::pow(h.beta2, t);

    auto& ps = params.all();
    const auto& gs = grads.all();
    auto& ms = state.first_moment.all();
    auto& vs = state.second_moment.all();
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto& theta = ps[k].values;
        const auto& g = gs[k].values;
        auto& m = ms[k].values;
        auto& v = vs[k].values;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
        }
    }
}

void adam_step(DenoiserModel& model, const ParamSet& grads, OptimizerState& state) {
    adam_step(model.params(), grads, state);
    model.step_count += 1;
}

}  // namespace radsynth::nn
