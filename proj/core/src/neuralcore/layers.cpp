#include "radsynth/neuralcore/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace radsynth::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

void check_geometry(const Tensor4& input, std::span<const double> weights, std::span<const double> bias,
                    const ConvGeometry& geom) {
    if (geom.stride == 0) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (geom.kernel == 0) throw std::invalid_argument("conv2d: kernel must be >= 1");
    if (input.shape().c != geom.in_ch) {
        throw std::invalid_argument("conv2d: input has " + std::to_string(input.shape().c) +
                                    " channels, expected " + std::to_string(geom.in_ch));
    }
    if (weights.size() != geom.weight_count()) {
        throw std::invalid_argument("conv2d: weight count mismatch");
    }
    if (!bias.empty() && bias.size() != geom.out_ch) {
        throw std::invalid_argument("conv2d: bias count mismatch");
    }
    if (input.shape().h + 2 * geom.pad < geom.kernel || input.shape().w + 2 * geom.pad < geom.kernel) {
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    }
}

// Rows: (ic, ky, kx); columns: (oy, ox).
void im2col(const double* src, std::size_t h, std::size_t w, const ConvGeometry& g, std::size_t oh,
            std::size_t ow, double* col) {
    const auto k = g.kernel;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    for (std::size_t ic = 0; ic < g.in_ch; ++ic) {
        const double* plane = src + ic * h * w;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                double* row = col + ((ic * k + ky) * k + kx) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
                    double* out = row + oy * ow;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(out, out + ow, 0.0);
                        continue;
                    }
                    const double* in_row = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
                        out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) ? 0.0 : in_row[ix];
                    }
                }
            }
        }
    }
}

void col2im(const double* col, std::size_t h, std::size_t w, const ConvGeometry& g, std::size_t oh,
            std::size_t ow, double* dst) {
    const auto k = g.kernel;
    const auto pad = static_cast<std::ptrdiff_t>(g.pad);
    std::fill(dst, dst + g.in_ch * h * w, 0.0);
    for (std::size_t ic = 0; ic < g.in_ch; ++ic) {
        double* plane = dst + ic * h * w;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const double* row = col + ((ic * k + ky) * k + kx) * oh * ow;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    double* out_row = plane + static_cast<std::size_t>(iy) * w;
                    const double* in = row + oy * ow;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
                        if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) out_row[ix] += in[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

std::size_t ConvGeometry::out_extent(std::size_t in) const {
    return (in + 2 * pad - kernel) / stride + 1;
}

Tensor4 conv2d(const Tensor4& input, std::span<const double> weights, std::span<const double> bias,
               const ConvGeometry& geom) {
    check_geometry(input, weights, bias, geom);
    const auto& s = input.shape();
    const std::size_t oh = geom.out_extent(s.h);
    const std::size_t ow = geom.out_extent(s.w);
    const std::size_t patch = geom.in_ch * geom.kernel * geom.kernel;
    const std::size_t positions = oh * ow;

    Tensor4 out(Shape4{s.n, geom.out_ch, oh, ow});
    std::vector<double> col(patch * positions);
    const ConstMap w(weights.data(), static_cast<Eigen::Index>(geom.out_ch), static_cast<Eigen::Index>(patch));
    for (std::size_t n = 0; n < s.n; ++n) {
        im2col(input.item(n).data(), s.h, s.w, geom, oh, ow, col.data());
        const ConstMap c(col.data(), static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(positions));
        MutMap o(out.item(n).data(), static_cast<Eigen::Index>(geom.out_ch), static_cast<Eigen::Index>(positions));
        o.noalias() = w * c;
        if (!bias.empty()) {
            for (std::size_t oc = 0; oc < geom.out_ch; ++oc) {
                o.row(static_cast<Eigen::Index>(oc)).array() += bias[oc];
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor4& input, std::span<const double> weights, const ConvGeometry& geom,
                     const Tensor4& grad_output, Tensor4* grad_input, std::span<double> grad_weights,
                     std::span<double> grad_bias) {
    check_geometry(input, weights, {}, geom);
    const auto& s = input.shape();
    const std::size_t oh = geom.out_extent(s.h);
    const std::size_t ow = geom.out_extent(s.w);
    if (grad_output.shape() != Shape4{s.n, geom.out_ch, oh, ow}) {
        throw std::invalid_argument("conv2d_backward: grad_output shape " + to_string(grad_output.shape()) +
                                    " does not match forward output");
    }
    if (grad_weights.size() != geom.weight_count() || (!grad_bias.empty() && grad_bias.size() != geom.out_ch)) {
        throw std::invalid_argument("conv2d_backward: gradient buffer size mismatch");
    }
    const std::size_t patch = geom.in_ch * geom.kernel * geom.kernel;
    const std::size_t positions = oh * ow;
    const auto rows = static_cast<Eigen::Index>(geom.out_ch);
    const auto cols = static_cast<Eigen::Index>(positions);

    if (grad_input) *grad_input = Tensor4(s);
    std::vector<double> col(patch * positions);
    std::vector<double> dcol(patch * positions);
    const ConstMap w(weights.data(), rows, static_cast<Eigen::Index>(patch));
    MutMap gw(grad_weights.data(), rows, static_cast<Eigen::Index>(patch));
    for (std::size_t n = 0; n < s.n; ++n) {
        const ConstMap go(grad_output.item(n).data(), rows, cols);
        im2col(input.item(n).data(), s.h, s.w, geom, oh, ow, col.data());
        const ConstMap c(col.data(), static_cast<Eigen::Index>(patch), cols);
        gw.noalias() += go * c.transpose();
        if (!grad_bias.empty()) {
            // Plain loop: Eigen's vectorized sum peels by buffer alignment,
            // which would make the rounding depend on the allocator.
            const double* g = grad_output.item(n).data();
            for (std::size_t oc = 0; oc < geom.out_ch; ++oc) {
                double acc = 0.0;
                for (std::size_t i = 0; i < positions; ++i) acc += g[oc * positions + i];
                grad_bias[oc] += acc;
            }
        }
        if (grad_input) {
            MutMap dc(dcol.data(), static_cast<Eigen::Index>(patch), cols);
            dc.noalias() = w.transpose() * go;
            col2im(dcol.data(), s.h, s.w, geom, oh, ow, grad_input->item(n).data());
        }
    }
}

double silu(double x) {
    return x / (1.0 + std::exp(-x));
}

double silu_derivative(double x) {
    const double sig = 1.0 / (1.0 + std::exp(-x));
    return sig * (1.0 + x * (1.0 - sig));
}

Tensor4 activate(const Tensor4& pre, Activation act) {
    if (act == Activation::Identity) return pre;
    Tensor4 out(pre.shape());
    auto& o = out.values();
    const auto& p = pre.values();
    for (std::size_t i = 0; i < p.size(); ++i) o[i] = silu(p[i]);
    return out;
}

Tensor4 activate_backward(const Tensor4& pre, const Tensor4& grad_post, Activation act) {
    if (pre.shape() != grad_post.shape()) {
        throw std::invalid_argument("activate_backward: shape mismatch");
    }
    if (act == Activation::Identity) return grad_post;
    Tensor4 out(pre.shape());
    auto& o = out.values();
    const auto& p = pre.values();
    const auto& g = grad_post.values();
    for (std::size_t i = 0; i < p.size(); ++i) o[i] = g[i] * silu_derivative(p[i]);
    return out;
}

Tensor4 upsample2x(const Tensor4& input) {
    const auto& s = input.shape();
    Tensor4 out(Shape4{s.n, s.c, 2 * s.h, 2 * s.w});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < 2 * s.h; ++y)
                for (std::size_t x = 0; x < 2 * s.w; ++x) out.at(n, c, y, x) = input.at(n, c, y / 2, x / 2);
    return out;
}

Tensor4 upsample2x_backward(const Tensor4& grad_output) {
    const auto& s = grad_output.shape();
    if (s.h % 2 != 0 || s.w % 2 != 0) {
        throw std::invalid_argument("upsample2x_backward: odd spatial extent");
    }
    Tensor4 out(Shape4{s.n, s.c, s.h / 2, s.w / 2});
    for (std::size_t n = 0; n < s.n; ++n)
        for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t x = 0; x < s.w; ++x) out.at(n, c, y / 2, x / 2) += grad_output.at(n, c, y, x);
    return out;
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
        throw std::invalid_argument("concat_channels: shape mismatch " + to_string(sa) + " vs " + to_string(sb));
    }
    Tensor4 out(Shape4{sa.n, sa.c + sb.c, sa.h, sa.w});
    for (std::size_t n = 0; n < sa.n; ++n) {
        auto dst = out.item(n);
        const auto ia = a.item(n);
        const auto ib = b.item(n);
        std::copy(ia.begin(), ia.end(), dst.begin());
        std::copy(ib.begin(), ib.end(), dst.begin() + static_cast<std::ptrdiff_t>(ia.size()));
    }
    return out;
}

void split_channels(const Tensor4& grad, std::size_t a_channels, Tensor4& grad_a, Tensor4& grad_b) {
    const auto& s = grad.shape();
    if (a_channels > s.c) throw std::invalid_argument("split_channels: too many channels");
    grad_a = Tensor4(Shape4{s.n, a_channels, s.h, s.w});
    grad_b = Tensor4(Shape4{s.n, s.c - a_channels, s.h, s.w});
    for (std::size_t n = 0; n < s.n; ++n) {
        const auto src = grad.item(n);
        auto da = grad_a.item(n);
        auto db = grad_b.item(n);
        std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(da.size()), da.begin());
        std::copy(src.begin() + static_cast<std::ptrdiff_t>(da.size()), src.end(), db.begin());
    }
}

void add_channel_bias(Tensor4& x, std::span<const double> bias, std::size_t stride, std::size_t offset) {
    const auto& s = x.shape();
    for (std::size_t n = 0; n < s.n; ++n) {
        auto item = x.item(n);
        for (std::size_t c = 0; c < s.c; ++c) {
            const double b = bias[n * stride + offset + c];
            for (std::size_t i = 0; i < s.plane(); ++i) item[c * s.plane() + i] += b;
        }
    }
}

void channel_bias_backward(const Tensor4& grad, std::span<double> grad_bias, std::size_t stride,
                           std::size_t offset) {
    const auto& s = grad.shape();
    for (std::size_t n = 0; n < s.n; ++n) {
        const auto item = grad.item(n);
        for (std::size_t c = 0; c < s.c; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s.plane(); ++i) acc += item[c * s.plane() + i];
            grad_bias[n * stride + offset + c] += acc;
        }
    }
}

std::vector<double> timestep_embedding(int t, std::size_t dim) {
    if (dim == 0 || dim % 2 != 0) {
        throw std::invalid_argument("timestep_embedding: dim must be even and positive");
    }
    const std::size_t half = dim / 2;
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
        out[i] = std::sin(t * freq);
        out[half + i] = std::cos(t * freq);
    }
    return out;
}

}  // namespace radsynth::nn
