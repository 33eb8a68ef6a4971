#include "radsynth/neuralcore/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "radsynth/common/rng.hpp"

namespace radsynth::nn {
namespace {

std::string down_name(std::size_t l) { return "down" + std::to_string(l); }
std::string up_name(std::size_t l) { return "up" + std::to_string(l); }
std::string merge_name(std::size_t l) { return "merge" + std::to_string(l); }

void add_conv(ParamSet& ps, const std::string& name, std::size_t in_ch, std::size_t out_ch) {
    ps.add(name + ".w", {out_ch, in_ch, 3, 3});
    ps.add(name + ".b", {out_ch});
}

ConvGeometry geometry(const ParamSet& ps, const std::string& name, std::size_t stride) {
    const auto& shape = ps.get(name + ".w").shape;
    return ConvGeometry{shape[1], shape[0], shape[2], stride, 1};
}

void glorot_fill(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : p.values) v = rng.uniform(-limit, limit);
}

struct ConvRef {
    std::span<const double> w;
    std::span<const double> b;
    ConvGeometry geom;
};

ConvRef conv_ref(const ParamSet& ps, const std::string& name, std::size_t stride) {
    const auto& w = ps.get(name + ".w");
    const auto& b = ps.get(name + ".b");
    return {w.values, b.values, geometry(ps, name, stride)};
}

std::span<double> grad_span(ParamSet& g, const std::string& name) {
    return g.get(name).values;
}

void check_inputs(const DenoiserModel& model, const Tensor4& x, std::span<const int> t) {
    const auto& a = model.arch();
    const auto& s = x.shape();
    if (s.c != a.in_channels) {
        throw std::invalid_argument("denoiser: expected " + std::to_string(a.in_channels) + " input channels");
    }
    const std::size_t factor = std::size_t{1} << a.num_down_levels;
    if (s.h == 0 || s.w == 0 || s.h % factor != 0 || s.w % factor != 0) {
        throw std::invalid_argument("denoiser: spatial dims " + to_string(s) + " not divisible by " +
                                    std::to_string(factor));
    }
    if (t.size() != s.n) {
        throw std::invalid_argument("denoiser: need one timestep per batch item");
    }
    for (int ti : t) {
        if (ti < 1 || ti > static_cast<int>(a.timesteps)) {
            throw std::invalid_argument("denoiser: timestep " + std::to_string(ti) + " outside [1, " +
                                        std::to_string(a.timesteps) + "]");
        }
    }
}

void accumulate(Tensor4& into, const Tensor4& from) {
    auto& a = into.values();
    const auto& b = from.values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace

ParamSet make_param_layout(const DenoiserArch& arch) {
    if (arch.base_channels == 0 || arch.in_channels == 0 || arch.num_down_levels == 0) {
        throw std::invalid_argument("DenoiserArch: channels and levels must be >= 1");
    }
    if (arch.time_embed_dim == 0 || arch.time_embed_dim % 2 != 0) {
        throw std::invalid_argument("DenoiserArch: time_embed_dim must be even and positive");
    }
    const std::size_t levels = arch.num_down_levels;
    std::size_t slots = arch.channels_at(0) + arch.channels_at(levels);
    for (std::size_t l = 1; l <= levels; ++l) slots += arch.channels_at(l);
    for (std::size_t l = 0; l < levels; ++l) slots += arch.channels_at(l);

    ParamSet ps;
    ps.add("time.w", {slots, arch.time_embed_dim});
    ps.add("time.b", {slots});
    add_conv(ps, "in", arch.in_channels, arch.channels_at(0));
    for (std::size_t l = 1; l <= levels; ++l) add_conv(ps, down_name(l), arch.channels_at(l - 1), arch.channels_at(l));
    add_conv(ps, "mid", arch.channels_at(levels), arch.channels_at(levels));
    for (std::size_t l = levels; l-- > 0;) {
        add_conv(ps, up_name(l), arch.channels_at(l + 1), arch.channels_at(l));
        add_conv(ps, merge_name(l), 2 * arch.channels_at(l), arch.channels_at(l));
    }
    add_conv(ps, "out", arch.channels_at(0), arch.in_channels);
    return ps;
}

DenoiserModel DenoiserModel::create(const DenoiserArch& arch, const InitOptions& init) {
    DenoiserModel m;
    m.arch_ = arch;
    m.params_ = make_param_layout(arch);
    Rng rng(init.seed);
    for (auto& p : m.params_.all()) {
        if (p.name == "time.w") {
            glorot_fill(p, p.shape[1], p.shape[0], rng);
        } else if (p.shape.size() == 4) {
            if (init.zero_output && p.name == "out.w") continue;
            const std::size_t k2 = p.shape[2] * p.shape[3];
            glorot_fill(p, p.shape[1] * k2, p.shape[0] * k2, rng);
        } else if (!init.zero_output && p.name == "out.b") {
            for (auto& v : p.values) v = rng.uniform(-0.1, 0.1);
        }
    }
    return m;
}

DenoiserModel DenoiserModel::from_parts(const DenoiserArch& arch, ParamSet params, std::uint64_t step_count) {
    make_param_layout(arch).require_same_layout(params);
    DenoiserModel m;
    m.arch_ = arch;
    m.params_ = std::move(params);
    m.step_count = step_count;
    return m;
}

DenoiserModel::TimeSlots DenoiserModel::time_slots() const {
    TimeSlots slots;
    const std::size_t levels = arch_.num_down_levels;
    std::size_t offset = 0;
    slots.in = offset;
    offset += arch_.channels_at(0);
    for (std::size_t l = 1; l <= levels; ++l) {
        slots.down.push_back(offset);
        offset += arch_.channels_at(l);
    }
    slots.mid = offset;
    offset += arch_.channels_at(levels);
    slots.merge.assign(levels, 0);
    for (std::size_t l = levels; l-- > 0;) {
        slots.merge[l] = offset;
        offset += arch_.channels_at(l);
    }
    slots.total = offset;
    return slots;
}

Tensor4 denoiser_forward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t) {
    ForwardCache cache;
    return denoiser_forward(model, x_t, t, cache);
}

Tensor4 denoiser_forward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                         ForwardCache& cache) {
    check_inputs(model, x_t, t);
    const auto& arch = model.arch();
    const auto& ps = model.params();
    const std::size_t batch = x_t.shape().n;
    const std::size_t levels = arch.num_down_levels;
    const std::size_t edim = arch.time_embed_dim;
    const auto slots = model.time_slots();
    const Activation act = arch.activation;

    // Time projection: bias[n] = W * emb(t_n) + b.
    cache.embedding.assign(batch * edim, 0.0);
    cache.time_bias.assign(batch * slots.total, 0.0);
    const auto& tw = ps.get("time.w").values;
    const auto& tb = ps.get("time.b").values;
    for (std::size_t n = 0; n < batch; ++n) {
        const auto emb = timestep_embedding(t[n], edim);
        std::copy(emb.begin(), emb.end(), cache.embedding.begin() + static_cast<std::ptrdiff_t>(n * edim));
        for (std::size_t j = 0; j < slots.total; ++j) {
            double acc = tb[j];
            for (std::size_t i = 0; i < edim; ++i) acc += tw[j * edim + i] * emb[i];
            cache.time_bias[n * slots.total + j] = acc;
        }
    }

    auto run = [&](ForwardCache::Layer& layer, const Tensor4& input, const std::string& name,
                   std::size_t stride, const std::size_t* slot) {
        const ConvRef c = conv_ref(ps, name, stride);
        layer.input = input;
        layer.pre = conv2d(input, c.w, c.b, c.geom);
        if (slot) add_channel_bias(layer.pre, cache.time_bias, slots.total, *slot);
        layer.post = activate(layer.pre, act);
    };

    run(cache.in, x_t, "in", 1, &slots.in);
    cache.down.assign(levels, {});
    const Tensor4* prev = &cache.in.post;
    for (std::size_t l = 1; l <= levels; ++l) {
        run(cache.down[l - 1], *prev, down_name(l), 2, &slots.down[l - 1]);
        prev = &cache.down[l - 1].post;
    }
    run(cache.mid, *prev, "mid", 1, &slots.mid);
    prev = &cache.mid.post;

    cache.up.assign(levels, {});
    cache.merge.assign(levels, {});
    for (std::size_t l = levels; l-- > 0;) {
        run(cache.up[l], upsample2x(*prev), up_name(l), 1, nullptr);
        const Tensor4& skip = (l == 0) ? cache.in.post : cache.down[l - 1].post;
        run(cache.merge[l], concat_channels(cache.up[l].post, skip), merge_name(l), 1, &slots.merge[l]);
        prev = &cache.merge[l].post;
    }

    cache.out_input = *prev;
    const ConvRef out = conv_ref(ps, "out", 1);
    cache.output = conv2d(cache.out_input, out.w, out.b, out.geom);
    return cache.output;
}

ParamSet denoiser_backward(const DenoiserModel& model, const Tensor4& x_t, std::span<const int> t,
                           const Tensor4& loss_grad) {
    ForwardCache cache;
    denoiser_forward(model, x_t, t, cache);
    return denoiser_backward(model, cache, t, loss_grad);
}

ParamSet denoiser_backward(const DenoiserModel& model, const ForwardCache& cache, std::span<const int> t,
                           const Tensor4& loss_grad) {
    if (loss_grad.shape() != cache.output.shape()) {
        throw std::invalid_argument("denoiser_backward: loss_grad shape " + to_string(loss_grad.shape()) +
                                    " != output shape " + to_string(cache.output.shape()));
    }
    if (t.size() != loss_grad.shape().n) {
        throw std::invalid_argument("denoiser_backward: need one timestep per batch item");
    }
    const auto& arch = model.arch();
    const auto& ps = model.params();
    const std::size_t batch = loss_grad.shape().n;
    const std::size_t levels = arch.num_down_levels;
    const std::size_t edim = arch.time_embed_dim;
    const auto slots = model.time_slots();
    const Activation act = arch.activation;

    ParamSet grads = ps.zeros_like();
    std::vector<double> g_time_bias(batch * slots.total, 0.0);

    // Returns d loss / d layer.input.
    auto back = [&](const ForwardCache::Layer& layer, const Tensor4& g_post, const std::string& name,
                    std::size_t stride, const std::size_t* slot, bool need_input_grad) {
        const Tensor4 g_pre = activate_backward(layer.pre, g_post, act);
        if (slot) channel_bias_backward(g_pre, g_time_bias, slots.total, *slot);
        const ConvRef c = conv_ref(ps, name, stride);
        Tensor4 g_in;
        conv2d_backward(layer.input, c.w, c.geom, g_pre, need_input_grad ? &g_in : nullptr,
                        grad_span(grads, name + ".w"), grad_span(grads, name + ".b"));
        return g_in;
    };

    const ConvRef out = conv_ref(ps, "out", 1);
    Tensor4 g_prev;
    conv2d_backward(cache.out_input, out.w, out.geom, loss_grad, &g_prev, grad_span(grads, "out.w"),
                    grad_span(grads, "out.b"));

    // Skip-path gradients for encoder outputs, indexed by level (0 = "in").
    std::vector<Tensor4> g_skip(levels);
    for (std::size_t l = 0; l < levels; ++l) {
        const Tensor4 g_concat = back(cache.merge[l], g_prev, merge_name(l), 1, &slots.merge[l], true);
        Tensor4 g_up;
        split_channels(g_concat, cache.up[l].post.shape().c, g_up, g_skip[l]);
        const Tensor4 g_upsampled = back(cache.up[l], g_up, up_name(l), 1, nullptr, true);
        g_prev = upsample2x_backward(g_upsampled);
    }

    // g is d loss / d (level-l output); level l < L also feeds merge_l.
    Tensor4 g = back(cache.mid, g_prev, "mid", 1, &slots.mid, true);
    for (std::size_t l = levels; l >= 1; --l) {
        if (l < levels) accumulate(g, g_skip[l]);
        g = back(cache.down[l - 1], g, down_name(l), 2, &slots.down[l - 1], true);
    }
    accumulate(g, g_skip[0]);
    back(cache.in, g, "in", 1, &slots.in, false);

    auto& gw = grads.get("time.w").values;
    auto& gb = grads.get("time.b").values;
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t j = 0; j < slots.total; ++j) {
            const double gj = g_time_bias[n * slots.total + j];
            gb[j] += gj;
            for (std::size_t i = 0; i < edim; ++i) gw[j * edim + i] += gj * cache.embedding[n * edim + i];
        }
    }
    return grads;
}

}  // namespace radsynth::nn
