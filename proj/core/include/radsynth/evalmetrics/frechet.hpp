#pragma once

#include <cstddef>

#include <Eigen/Core>

namespace radsynth::eval {

/// Gaussian fit of a feature set.
struct FidMoments {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    std::size_t n = 0;
};

/// Sample mean and unbiased (n - 1) covariance of the rows, symmetrized as
/// (A + A^T) / 2. Requires at least two rows.
FidMoments fit_moments(const Eigen::MatrixXd& features);

/// Principal square root of a symmetric PSD matrix by symmetric
/// eigendecomposition; negative eigenvalues are clamped to zero.
/// Throws std::invalid_argument if |A - A^T| exceeds 1e-8 * max(1, max|A|).
Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a);

/// |mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
/// Small negative totals (> -1e-6) are clamped to 0.
/// Throws std::invalid_argument on dimension mismatch.
double frechet_distance(const FidMoments& a, const FidMoments& b);

}  // namespace radsynth::eval
