#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "radsynth/neuralcore/adam.hpp"
#include "radsynth/neuralcore/denoiser.hpp"

namespace radsynth::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    DenoiserModel model;
    OptimizerState optimizer;

    bool operator==(const Checkpoint&) const = default;
};

/// Layout (all integers and floats little-endian):
///   "DDPMCKPT" | u32 version
///   arch: u32 base_channels, num_down_levels, time_embed_dim, in_channels,
///         activation, timesteps
///   u32 param_count, then per parameter:
///         u32 name_len, name bytes, u32 rank, u64 dims[rank], f64 values
///   optimizer: f64 lr, beta1, beta2, eps | u64 timestep |
///         per parameter (same order): f64 first moment, f64 second moment
///   u64 step_count
std::vector<std::uint8_t> serialize_checkpoint(const DenoiserModel& model, const OptimizerState& optimizer);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model,
                     const OptimizerState& optimizer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace radsynth::nn
