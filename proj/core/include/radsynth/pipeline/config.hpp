#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/diffusion/trainer.hpp"

namespace radsynth::pipeline {

struct PipelineConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path checkpoint_dir = "checkpoints";
    std::filesystem::path output_dir = "out";
    int image_size = 16;
    diffusion::TrainConfig train;
    int timesteps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    std::uint64_t embedder_seed = 7;
    std::size_t embed_dim = 64;
    int n_quartets = 50;
    int raters_expected = 8;
    std::uint64_t seed = 0;

    diffusion::NoiseSchedule schedule() const;
};

/// Flat "section.key" -> value map.
using ConfigValues = std::map<std::string, std::string>;

/// Every key understood by config_from_values, in documentation order.
const std::vector<std::string>& config_keys();

/// key=value lines; '#' starts a comment; "[section]" prefixes the keys
/// that follow with "section.". Keys may also be written fully qualified.
ConfigValues parse_config_text(const std::string& text);

/// Name of the environment variable overriding a key:
/// "diffusion.lr" -> "RADSYNTH_DIFFUSION_LR".
std::string env_name(const std::string& key);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Precedence, lowest first: defaults, file, environment, overrides.
/// Relative paths resolve against base_dir. Unknown keys and malformed
/// values throw std::invalid_argument naming the key.
PipelineConfig resolve_config(const ConfigValues& file_values, const EnvLookup& env, const ConfigValues& overrides,
                              const std::filesystem::path& base_dir);

PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides,
                           const EnvLookup& env = process_env());

/// Canonical text form; parse_config_text(to_config_text(c)) round-trips.
std::string to_config_text(const PipelineConfig& config);

}  // namespace radsynth::pipeline
