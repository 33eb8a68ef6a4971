#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace radsynth::nn {

struct Shape4 {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t size() const { return n * c * h * w; }
    std::size_t plane() const { return h * w; }
    bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

/// Dense (batch, channels, height, width) tensor of doubles, row-major.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape4 shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
    Tensor4(Shape4 shape, std::vector<double> values);

    const Shape4& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }
    double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
    }

    std::span<double> item(std::size_t n) {
        return {data_.data() + n * shape_.c * shape_.plane(), shape_.c * shape_.plane()};
    }
    std::span<const double> item(std::size_t n) const {
        return {data_.data() + n * shape_.c * shape_.plane(), shape_.c * shape_.plane()};
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const;
    bool operator==(const Tensor4&) const = default;

private:
    Shape4 shape_;
    std::vector<double> data_;
};

/// Named parameter tensor of arbitrary rank.
struct Param {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const Param&) const = default;
};

/// Ordered collection of uniquely named parameters. Order is insertion order
/// and is the serialization order.
class ParamSet {
public:
    Param& add(std::string name, std::vector<std::size_t> shape, double fill = 0.0);

    Param& get(const std::string& name);
    const Param& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }
    std::size_t count() const { return params_.size(); }
    std::size_t total_size() const;

    /// Same names and shapes, all values zero.
    ParamSet zeros_like() const;
    /// Throws std::invalid_argument unless names and shapes match in order.
    void require_same_layout(const ParamSet& other) const;

    bool operator==(const ParamSet&) const = default;

private:
    std::vector<Param> params_;
};

}  // namespace radsynth::nn
