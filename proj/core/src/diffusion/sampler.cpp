#include "radsynth/diffusion/sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "radsynth/common/rng.hpp"
#include "radsynth/diffusion/data.hpp"

namespace radsynth::diffusion {

std::vector<imaging::GrayImage> sample(const nn::DenoiserModel& model, const NoiseSchedule& sched,
                                       const SampleRequest& request) {
    if (request.count < 1) throw std::invalid_argument("sample: n must be >= 1");
    if (request.batch_size == 0) throw std::invalid_argument("sample: batch_size must be >= 1");
    if (static_cast<int>(model.arch().timesteps) < sched.steps()) {
        throw std::invalid_argument("sample: schedule longer than the model's timestep range");
    }
    const auto side = static_cast<std::size_t>(request.size);
    const int steps = sched.steps();

    std::vector<imaging::GrayImage> out;
    for (int start = 0; start < request.count; start += static_cast<int>(request.batch_size)) {
        if (request.deadline && std::chrono::steady_clock::now() >= *request.deadline) break;
        const auto batch = static_cast<std::size_t>(std::min<int>(static_cast<int>(request.batch_size),
                                                                  request.count - start));
        std::vector<Rng> streams;
        for (std::size_t i = 0; i < batch; ++i) {
            streams.push_back(Rng::derive(request.seed, request.first_index + static_cast<std::uint64_t>(start) + i));
        }
        nn::Tensor4 x(nn::Shape4{batch, model.arch().in_channels, side, side});
        for (std::size_t i = 0; i < batch; ++i)
            for (auto& v : x.item(i)) v = streams[i].normal();

        nn::Tensor4 z(x.shape());
        std::vector<int> t(batch);
        for (int step = steps; step >= 1; --step) {
            std::fill(t.begin(), t.end(), step);
            const nn::Tensor4 eps_hat = nn::denoiser_forward(model, x, t);
            if (step > 1) {
                for (std::size_t i = 0; i < batch; ++i)
                    for (auto& v : z.item(i)) v = streams[i].normal();
            }
            x = p_sample_step(x, step, eps_hat, sched, step > 1 ? &z : nullptr);
        }

        auto images = tensor_to_images(x);
        for (std::size_t i = 0; i < batch; ++i) {
            auto& img = images[i];
            const auto global = request.first_index + static_cast<std::uint64_t>(start) + i;
            char id[96];
            if (request.checkpoint_index) {
                std::snprintf(id, sizeof id, "ckpt%03d_s%llu_%06llu", *request.checkpoint_index,
                              static_cast<unsigned long long>(request.seed), static_cast<unsigned long long>(global));
            } else {
                std::snprintf(id, sizeof id, "synth_s%llu_%06llu", static_cast<unsigned long long>(request.seed),
                              static_cast<unsigned long long>(global));
            }
            img.meta.source_id = id;
            img.meta.origin = imaging::Origin::Synthetic;
            img.meta.checkpoint = request.checkpoint_index;
            img.meta.facing = imaging::Facing::Left;
            img.meta.inverted = false;
            out.push_back(std::move(img));
        }
    }
    return out;
}

std::vector<imaging::GrayImage> sample(const nn::DenoiserModel& model, const NoiseSchedule& sched, int n,
                                       std::uint64_t seed, std::optional<int> checkpoint_index, int size) {
    SampleRequest req;
    req.count = n;
    req.seed = seed;
    req.checkpoint_index = checkpoint_index;
    req.size = size;
    return sample(model, sched, req);
}

}  // namespace radsynth::diffusion
