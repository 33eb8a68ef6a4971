#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radsynth/common/rng.hpp"
#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/imaging/gray_image.hpp"
#include "radsynth/neuralcore/denoiser.hpp"

namespace radsynth::diffusion {

struct TrainConfig {
    std::size_t batch_size = 8;
    double lr = 5e-5;
    std::uint64_t max_steps = 160000;
    std::uint64_t checkpoint_interval = 2000;
    double val_fraction = 0.15;
    std::uint64_t seed = 0;
    /// Noise seed for validation loss, reused at every checkpoint.
    std::uint64_t eval_seed = 12345;
    nn::DenoiserArch arch;

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;
};

struct CheckpointRecord {
    std::uint64_t checkpoint_index = 0;
    std::uint64_t step = 0;
    double train_loss = 0.0;  // mean over the steps since the previous checkpoint
    std::optional<double> val_loss;
    std::filesystem::path file;
};

struct TrainResult {
    std::vector<CheckpointRecord> records;
    std::vector<double> step_losses;  // one per optimizer step
};

/// Noised minibatch drawn for the epsilon-prediction objective.
struct NoisedBatch {
    nn::Tensor4 x_t;
    nn::Tensor4 eps;
    std::vector<int> t;
};

/// t ~ U{1..T} and eps ~ N(0, I) per item, consumed from rng in item order.
NoisedBatch draw_noised_batch(const nn::Tensor4& x0, const NoiseSchedule& sched, Rng& rng);

struct LossStep {
    double loss = 0.0;
    nn::ParamSet grads;
};

/// Mean squared error between eps and the model's prediction, averaged over
/// batch and elements, with parameter gradients.
LossStep loss_step(const nn::DenoiserModel& model, const nn::Tensor4& batch, const NoiseSchedule& sched, Rng& rng);

/// Mean loss over the whole set with a fixed noise stream. No gradients.
double evaluation_loss(const nn::DenoiserModel& model, std::span<const imaging::GrayImage> images,
                       const NoiseSchedule& sched, std::uint64_t noise_seed, std::size_t batch_size);

std::filesystem::path checkpoint_file_name(std::uint64_t checkpoint_index);

using TrainProgress = std::function<void(const CheckpointRecord&)>;

/// Runs config.max_steps Adam steps over seeded shuffled epochs (partial
/// trailing batches dropped). Every checkpoint_interval steps it records the
/// validation loss (when val_images is non-empty), writes
/// checkpoint_dir/ckpt_NNNN.bin and appends to checkpoint_dir/checkpoints.jsonl.
/// Per-step losses go to checkpoint_dir/train_loss.csv.
///
/// Throws std::invalid_argument when train_images cannot fill one batch and
/// std::runtime_error on I/O failure.
TrainResult train(std::span<const imaging::GrayImage> train_images, std::span<const imaging::GrayImage> val_images,
                  const TrainConfig& config, const NoiseSchedule& sched, const std::filesystem::path& checkpoint_dir,
                  const TrainProgress& progress = {});

/// Reads checkpoints.jsonl written by train().
std::vector<CheckpointRecord> read_checkpoint_log(const std::filesystem::path& checkpoint_dir);

}  // namespace radsynth::diffusion
