#include "radsynth/evalmetrics/frechet.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace radsynth::eval {

FidMoments fit_moments(const Eigen::MatrixXd& features) {
    if (features.rows() < 2) throw std::invalid_argument("fit_moments: need at least two samples");
    FidMoments m;
    m.n = static_cast<std::size_t>(features.rows());
    m.mu = features.colwise().mean().transpose();
    const Eigen::MatrixXd centered = features.rowwise() - m.mu.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);
    m.sigma = 0.5 * (cov + cov.transpose());
    return m;
}

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("sqrt_psd: matrix is not square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw std::invalid_argument("sqrt_psd: matrix is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("sqrt_psd: eigendecomposition failed");
    const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

double frechet_distance(const FidMoments& a, const FidMoments& b) {
    if (a.mu.size() != b.mu.size() || a.sigma.rows() != b.sigma.rows() || a.sigma.rows() != a.mu.size()) {
        throw std::invalid_argument("frechet_distance: dimension mismatch");
    }
    const double mean_term = (a.mu - b.mu).squaredNorm();
    const Eigen::MatrixXd root_a = sqrt_psd(a.sigma);
    const Eigen::MatrixXd inner = root_a * b.sigma * root_a;
    const Eigen::MatrixXd inner_sym = 0.5 * (inner + inner.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(inner_sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("frechet_distance: eigendecomposition failed");
    const double cross_trace = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double total = mean_term + a.sigma.trace() + b.sigma.trace() - 2.0 * cross_trace;
    if (total < 0.0 && total > -1e-6) return 0.0;
    return total;
}

}  // namespace radsynth::eval
