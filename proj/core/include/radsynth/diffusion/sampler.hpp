#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/imaging/gray_image.hpp"
#include "radsynth/neuralcore/denoiser.hpp"

namespace radsynth::diffusion {

struct SampleRequest {
    int count = 1;
    int size = 16;              // square output side
    std::uint64_t seed = 0;
    std::uint64_t first_index = 0;  // global index of the first image (resume cursor)
    std::optional<int> checkpoint_index;
    std::size_t batch_size = 16;
    /// Stop before starting a batch once this instant has passed.
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Ancestral sampling: image i starts from unit-Gaussian x_T drawn from its
/// own stream Rng::derive(seed, first_index + i) and takes p_sample_step for
/// t = T..1; outputs are clamped to [-1, 1] and mapped to [0, 255]. Images
/// depend only on (model, schedule, seed, global index), never on batching.
///
/// Returns fewer than count images only when the deadline expired.
std::vector<imaging::GrayImage> sample(const nn::DenoiserModel& model, const NoiseSchedule& sched,
                                       const SampleRequest& request);

/// Convenience overload matching the common call shape.
std::vector<imaging::GrayImage> sample(const nn::DenoiserModel& model, const NoiseSchedule& sched, int n,
                                       std::uint64_t seed, std::optional<int> checkpoint_index, int size);

}  // namespace radsynth::diffusion
