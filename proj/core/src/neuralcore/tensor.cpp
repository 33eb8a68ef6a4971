#include "radsynth/neuralcore/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace radsynth::nn {

std::string to_string(const Shape4& s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
           std::to_string(s.w) + ")";
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> values) : shape_(shape), data_(std::move(values)) {
    if (data_.size() != shape_.size()) {
        throw std::invalid_argument("Tensor4: value count " + std::to_string(data_.size()) +
                                    " does not match shape " + to_string(shape_));
    }
}

bool Tensor4::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Param& ParamSet::add(std::string name, std::vector<std::size_t> shape, double fill) {
    if (contains(name)) {
        throw std::invalid_argument("ParamSet: duplicate parameter name '" + name + "'");
    }
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    params_.push_back(Param{std::move(name), std::move(shape), std::vector<double>(n, fill)});
    return params_.back();
}

Param& ParamSet::get(const std::string& name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("ParamSet: no parameter '" + name + "'");
}

const Param& ParamSet::get(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    throw std::out_of_range("ParamSet: no parameter '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return true;
    }
    return false;
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const auto& p : params_) out.add(p.name, p.shape);
    return out;
}

void ParamSet::require_same_layout(const ParamSet& other) const {
    if (other.params_.size() != params_.size()) {
        throw std::invalid_argument("parameter count mismatch");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name != other.params_[i].name || params_[i].shape != other.params_[i].shape) {
            throw std::invalid_argument("parameter layout mismatch at '" + params_[i].name + "'");
        }
    }
}

}  // namespace radsynth::nn
