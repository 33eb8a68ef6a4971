#include "radsynth/evalmetrics/fid_curve.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "radsynth/diffusion/sampler.hpp"
#include "radsynth/neuralcore/checkpoint.hpp"

namespace radsynth::eval {

std::vector<FidPoint> fid_curve(std::span<const CheckpointRef> checkpoints, const FidMoments& real_moments,
                                int n_synth, const Embedder& embedder, std::uint64_t seed,
                                const diffusion::NoiseSchedule& sched, int image_size) {
    if (n_synth < 2) throw std::invalid_argument("fid_curve: n_synth must be >= 2");
    std::vector<FidPoint> out;
    for (const auto& ref : checkpoints) {
        const nn::Checkpoint ckpt = nn::load_checkpoint(ref.file);
        diffusion::SampleRequest req;
        req.count = n_synth;
        req.size = image_size;
        req.seed = seed;
        req.checkpoint_index = static_cast<int>(ref.checkpoint_index);
        const auto images = diffusion::sample(ckpt.model, sched, req);
        const FidMoments synth = fit_moments(embedder.embed(images));
        out.push_back({ref.checkpoint_index, ckpt.model.step_count, frechet_distance(real_moments, synth)});
    }
    return out;
}

std::vector<FidPoint> fid_curve(std::span<const CheckpointRef> checkpoints,
                                std::span<const imaging::GrayImage> real_images, int n_synth,
                                const Embedder& embedder, std::uint64_t seed, const diffusion::NoiseSchedule& sched) {
    if (real_images.size() < 2) throw std::invalid_argument("fid_curve: need at least two real images");
    const FidMoments real = fit_moments(embedder.embed(real_images));
    return fid_curve(checkpoints, real, n_synth, embedder, seed, sched, real_images.front().width());
}

void write_fid_csv(std::span<const FidPoint> points, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "checkpoint_index,step,fid\n";
    char buf[96];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g\n", static_cast<unsigned long long>(p.checkpoint_index),
                      static_cast<unsigned long long>(p.step), p.fid);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace radsynth::eval
