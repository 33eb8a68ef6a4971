#include "radsynth/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "radsynth/common/digest.hpp"

namespace radsynth::pipeline {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("config " + key + ": expected unsigned integer, got '" + v + "'");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const auto u = to_u64(key, v);
    if (u > 1'000'000'000ULL) throw std::invalid_argument("config " + key + ": value too large");
    return static_cast<int>(u);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty()) throw std::invalid_argument("config " + key + ": expected number, got '" + v + "'");
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

diffusion::NoiseSchedule PipelineConfig::schedule() const {
    return diffusion::linear_schedule(timesteps, beta_start, beta_end);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "paths.data_dir",         "paths.checkpoint_dir",  "paths.output_dir",
        "data.image_size",        "diffusion.batch_size",  "diffusion.lr",
        "diffusion.max_steps",    "diffusion.checkpoint_interval", "diffusion.val_fraction",
        "diffusion.eval_seed",    "diffusion.base_channels", "diffusion.levels",
        "diffusion.time_embed_dim", "schedule.timesteps",  "schedule.beta_start",
        "schedule.beta_end",      "embedder.seed",         "embedder.dim",
        "study.n_quartets",       "study.raters",          "global.seed",
    };
    return keys;
}

ConfigValues parse_config_text(const std::string& text) {
    ConfigValues out;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
        out[key] = value;
    }
    return out;
}

std::string env_name(const std::string& key) {
    std::string out = "RADSYNTH_";
    for (char c : key) out.push_back(c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return out;
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

PipelineConfig resolve_config(const ConfigValues& file_values, const EnvLookup& env, const ConfigValues& overrides,
                              const std::filesystem::path& base_dir) {
    const auto& keys = config_keys();
    auto known = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
    ConfigValues merged;
    for (const auto* layer : {&file_values, &overrides}) {
        for (const auto& [k, v] : *layer) {
            if (!known(k)) throw std::invalid_argument("config: unknown key '" + k + "'");
        }
    }
    merged = file_values;
    if (env) {
        for (const auto& k : keys) {
            if (auto v = env(env_name(k))) merged[k] = *v;
        }
    }
    for (const auto& [k, v] : overrides) merged[k] = v;

    PipelineConfig c;
    auto path_of = [&](const std::string& v) {
        std::filesystem::path p(v);
        if (p.is_relative()) p = base_dir / p;
        return std::filesystem::weakly_canonical(p);
    };
    c.data_dir = path_of(c.data_dir.string());
    c.checkpoint_dir = path_of(c.checkpoint_dir.string());
    c.output_dir = path_of(c.output_dir.string());
    for (const auto& [k, v] : merged) {
        if (k == "paths.data_dir") c.data_dir = path_of(v);
        else if (k == "paths.checkpoint_dir") c.checkpoint_dir = path_of(v);
        else if (k == "paths.output_dir") c.output_dir = path_of(v);
        else if (k == "data.image_size") c.image_size = to_int(k, v);
        else if (k == "diffusion.batch_size") c.train.batch_size = to_u64(k, v);
        else if (k == "diffusion.lr") c.train.lr = to_double(k, v);
        else if (k == "diffusion.max_steps") c.train.max_steps = to_u64(k, v);
        else if (k == "diffusion.checkpoint_interval") c.train.checkpoint_interval = to_u64(k, v);
        else if (k == "diffusion.val_fraction") c.train.val_fraction = to_double(k, v);
        else if (k == "diffusion.eval_seed") c.train.eval_seed = to_u64(k, v);
        else if (k == "diffusion.base_channels") c.train.arch.base_channels = to_int(k, v);
        else if (k == "diffusion.levels") c.train.arch.num_down_levels = to_int(k, v);
        else if (k == "diffusion.time_embed_dim") c.train.arch.time_embed_dim = to_int(k, v);
        else if (k == "schedule.timesteps") c.timesteps = to_int(k, v);
        else if (k == "schedule.beta_start") c.beta_start = to_double(k, v);
        else if (k == "schedule.beta_end") c.beta_end = to_double(k, v);
        else if (k == "embedder.seed") c.embedder_seed = to_u64(k, v);
        else if (k == "embedder.dim") c.embed_dim = to_u64(k, v);
        else if (k == "study.n_quartets") c.n_quartets = to_int(k, v);
        else if (k == "study.raters") c.raters_expected = to_int(k, v);
        else if (k == "global.seed") c.seed = to_u64(k, v);
    }
    c.train.seed = c.seed;
    c.train.arch.timesteps = c.timesteps;
    c.train.validate();
    if (c.image_size < 8) throw std::invalid_argument("config data.image_size: must be >= 8");
    if (c.timesteps < 2) throw std::invalid_argument("config schedule.timesteps: must be >= 2");
    if (c.embed_dim < 4 || c.embed_dim % 4 != 0) throw std::invalid_argument("config embedder.dim: must be a positive multiple of 4");
    return c;
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const ConfigValues& overrides,
                           const EnvLookup& env) {
    ConfigValues values;
    std::filesystem::path base = std::filesystem::current_path();
    if (file) {
        values = parse_config_text(read_text_file(*file));
        base = std::filesystem::absolute(*file).parent_path();
    }
    return resolve_config(values, env, overrides, base);
}

std::string to_config_text(const PipelineConfig& c) {
    std::string out;
    auto line = [&](const std::string& k, const std::string& v) { out += k + "=" + v + "\n"; };
    line("paths.data_dir", c.data_dir.string());
    line("paths.checkpoint_dir", c.checkpoint_dir.string());
    line("paths.output_dir", c.output_dir.string());
    line("data.image_size", std::to_string(c.image_size));
    line("diffusion.batch_size", std::to_string(c.train.batch_size));
    line("diffusion.lr", fmt_double(c.train.lr));
    line("diffusion.max_steps", std::to_string(c.train.max_steps));
    line("diffusion.checkpoint_interval", std::to_string(c.train.checkpoint_interval));
    line("diffusion.val_fraction", fmt_double(c.train.val_fraction));
    line("diffusion.eval_seed", std::to_string(c.train.eval_seed));
    line("diffusion.base_channels", std::to_string(c.train.arch.base_channels));
    line("diffusion.levels", std::to_string(c.train.arch.num_down_levels));
    line("diffusion.time_embed_dim", std::to_string(c.train.arch.time_embed_dim));
    line("schedule.timesteps", std::to_string(c.timesteps));
    line("schedule.beta_start", fmt_double(c.beta_start));
    line("schedule.beta_end", fmt_double(c.beta_end));
    line("embedder.seed", std::to_string(c.embedder_seed));
    line("embedder.dim", std::to_string(c.embed_dim));
    line("study.n_quartets", std::to_string(c.n_quartets));
    line("study.raters", std::to_string(c.raters_expected));
    line("global.seed", std::to_string(c.seed));
    return out;
}

}  // namespace radsynth::pipeline
