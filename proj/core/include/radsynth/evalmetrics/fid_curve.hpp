#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/evalmetrics/embedder.hpp"
#include "radsynth/evalmetrics/frechet.hpp"
#include "radsynth/imaging/gray_image.hpp"

namespace radsynth::eval {

struct FidPoint {
    std::uint64_t checkpoint_index = 0;
    std::uint64_t step = 0;
    double fid = 0.0;
};

struct CheckpointRef {
    std::uint64_t checkpoint_index = 0;
    std::filesystem::path file;
};

/// For each checkpoint: sample n_synth images (seeded identically for every
/// checkpoint), embed them and compute the Frechet distance to the real set's
/// moments. Step is read from the checkpoint itself.
/// Requires n_synth >= 2.
std::vector<FidPoint> fid_curve(std::span<const CheckpointRef> checkpoints, const FidMoments& real_moments,
                                int n_synth, const Embedder& embedder, std::uint64_t seed,
                                const diffusion::NoiseSchedule& sched, int image_size);

std::vector<FidPoint> fid_curve(std::span<const CheckpointRef> checkpoints,
                                std::span<const imaging::GrayImage> real_images, int n_synth,
                                const Embedder& embedder, std::uint64_t seed, const diffusion::NoiseSchedule& sched);

/// CSV "checkpoint_index,step,fid".
void write_fid_csv(std::span<const FidPoint> points, const std::filesystem::path& path);

}  // namespace radsynth::eval
