#include "radsynth/neuralcore/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>
#include <string>

#include "radsynth/common/digest.hpp"

namespace radsynth::nn {
namespace {

constexpr char kMagic[8] = {'D', 'D', 'P', 'M', 'C', 'K', 'P', 'T'};

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void f64s(const std::vector<double>& vs) {
        for (double v : vs) f64(v);
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated file");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    void f64s(std::vector<double>& vs) {
        for (double& v : vs) v = f64();
    }
    bool at_end() const { return pos_ == bytes_.size(); }

private:
    template <typename T>
    T le() {
        const auto s = take(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(s[i]) << (8 * i);
        return v;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DenoiserModel& model, const OptimizerState& optimizer) {
    const auto& ps = model.params();
    ps.require_same_layout(optimizer.first_moment);
    ps.require_same_layout(optimizer.second_moment);

    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    const auto& a = model.arch();
    w.u32(a.base_channels);
    w.u32(a.num_down_levels);
    w.u32(a.time_embed_dim);
    w.u32(a.in_channels);
    w.u32(static_cast<std::uint32_t>(a.activation));
    w.u32(a.timesteps);

    w.u32(static_cast<std::uint32_t>(ps.count()));
    for (const auto& p : ps.all()) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.bytes(p.name.data(), p.name.size());
        w.u32(static_cast<std::uint32_t>(p.shape.size()));
        for (auto d : p.shape) w.u64(d);
        w.f64s(p.values);
    }

    const auto& h = optimizer.hyper;
    w.f64(h.lr);
    w.f64(h.beta1);
    w.f64(h.beta2);
    w.f64(h.eps);
    w.u64(optimizer.timestep);
    for (std::size_t k = 0; k < ps.count(); ++k) {
        w.f64s(optimizer.first_moment.all()[k].values);
        w.f64s(optimizer.second_moment.all()[k].values);
    }
    w.u64(model.step_count);
    return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    DenoiserArch arch;
    arch.base_channels = r.u32();
    arch.num_down_levels = r.u32();
    arch.time_embed_dim = r.u32();
    arch.in_channels = r.u32();
    const auto act = r.u32();
    if (act > 1) throw std::runtime_error("checkpoint: unknown activation");
    arch.activation = static_cast<Activation>(act);
    arch.timesteps = r.u32();

    ParamSet params;
    const auto count = r.u32();
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = r.u32();
        const auto name_bytes = r.take(name_len);
        std::string name(name_bytes.begin(), name_bytes.end());
        const auto rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
        auto& p = params.add(std::move(name), std::move(shape));
        r.f64s(p.values);
    }

    OptimizerState opt;
    opt.hyper.lr = r.f64();
    opt.hyper.beta1 = r.f64();
    opt.hyper.beta2 = r.f64();
    opt.hyper.eps = r.f64();
    opt.timestep = r.u64();
    opt.first_moment = params.zeros_like();
    opt.second_moment = params.zeros_like();
    for (std::size_t k = 0; k < params.count(); ++k) {
        r.f64s(opt.first_moment.all()[k].values);
        r.f64s(opt.second_moment.all()[k].values);
    }
    const auto step_count = r.u64();
    if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");

    return Checkpoint{DenoiserModel::from_parts(arch, std::move(params), step_count), std::move(opt)};
}

void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model,
                     const OptimizerState& optimizer) {
    const auto bytes = serialize_checkpoint(model, optimizer);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    write_file_bytes(tmp, bytes);
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return deserialize_checkpoint(bytes);
}

}  // namespace radsynth::nn
