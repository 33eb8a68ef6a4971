#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "radsynth/common/rng.hpp"
#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/evalmetrics/embedder.hpp"
#include "radsynth/evalmetrics/features_csv.hpp"
#include "radsynth/evalmetrics/fid_curve.hpp"
#include "radsynth/evalmetrics/frechet.hpp"
#include "radsynth/imaging/phantom.hpp"
#include "radsynth/neuralcore/checkpoint.hpp"
#include "temp_dir.hpp"

using namespace radsynth;
using namespace radsynth::eval;

namespace {

Eigen::MatrixXd gaussian_cloud(std::size_t n, const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol, Rng& rng) {
    Eigen::MatrixXd out(n, mu.size());
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd z(mu.size());
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
        out.row(static_cast<Eigen::Index>(i)) = (mu + chol * z).transpose();
    }
    return out;
}

FidMoments scalar_moments(double mu, double var) {
    FidMoments m;
    m.mu = Eigen::VectorXd::Constant(1, mu);
    m.sigma = Eigen::MatrixXd::Constant(1, 1, var);
    m.n = 2;
    return m;
}

}  // namespace

TEST(Embedder, DeterministicAndSeeded) {
    const auto imgs = imaging::make_phantom_set(3, 16, 1);
    Embedder a(5), b(5), c(6);
    const auto fa = embed_set(imgs, a);
    EXPECT_EQ(fa.rows(), 3);
    EXPECT_EQ(fa.cols(), 64);
    EXPECT_EQ(fa, embed_set(imgs, b));
    EXPECT_NE(fa, embed_set(imgs, c));
    const std::vector<imaging::GrayImage> twice{imgs[0], imgs[0]};
    const auto ft = embed_set(twice, a);
    EXPECT_EQ(ft.row(0), ft.row(1));
}

TEST(Embedder, BlackAndWhiteDiffer) {
    Embedder e(7);
    const std::vector<imaging::GrayImage> imgs{imaging::GrayImage(16, 16, 0), imaging::GrayImage(16, 16, 255)};
    const auto f = embed_set(imgs, e);
    EXPECT_GT((f.row(0) - f.row(1)).norm(), 0.0);
}

TEST(Moments, HandExample) {
    Eigen::MatrixXd f(2, 2);
    f << 0, 0, 2, 2;
    const auto m = fit_moments(f);
    EXPECT_EQ(m.mu, Eigen::Vector2d(1, 1));
    Eigen::MatrixXd expect(2, 2);
    expect << 2, 2, 2, 2;
    EXPECT_TRUE(m.sigma.isApprox(expect, 1e-15));
    EXPECT_THROW(fit_moments(Eigen::MatrixXd::Zero(1, 2)), std::invalid_argument);
}

TEST(Moments, RepeatedRowHasZeroCovarianceAndRowOrderIsIrrelevant) {
    Eigen::MatrixXd same = Eigen::RowVector3d(1.5, -2, 7).replicate(5, 1);
    EXPECT_EQ(fit_moments(same).sigma, Eigen::MatrixXd::Zero(3, 3));

    Rng rng(2);
    Eigen::MatrixXd f(6, 3);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
    Eigen::MatrixXd rev = f.colwise().reverse();
    const auto a = fit_moments(f), b = fit_moments(rev);
    EXPECT_TRUE(a.mu.isApprox(b.mu, 1e-14));
    EXPECT_TRUE(a.sigma.isApprox(b.sigma, 1e-14));
}

TEST(SqrtPsd, Examples) {
    EXPECT_TRUE(sqrt_psd(Eigen::MatrixXd::Identity(3, 3)).isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-14));
    const Eigen::MatrixXd d = Eigen::Vector2d(4, 9).asDiagonal();
    EXPECT_TRUE(sqrt_psd(d).isApprox(Eigen::MatrixXd(Eigen::Vector2d(2, 3).asDiagonal()), 1e-14));

    Rng rng(3);
    Eigen::MatrixXd b(8, 8);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    const Eigen::MatrixXd a = b.transpose() * b;
    const auto s = sqrt_psd(a);
    EXPECT_LT((s * s - a).cwiseAbs().maxCoeff(), 1e-10 * a.cwiseAbs().maxCoeff());

    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
    asym(0, 1) = 0.5;
    EXPECT_THROW(sqrt_psd(asym), std::invalid_argument);
}

TEST(Frechet, ScalarClosedForm) {
    EXPECT_NEAR(frechet_distance(scalar_moments(0, 1), scalar_moments(1, 4)), 2.0, 1e-10);
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const double m1 = rng.uniform(-3, 3), m2 = rng.uniform(-3, 3);
        const double s1 = rng.uniform(0.1, 3), s2 = rng.uniform(0.1, 3);
        const double expect = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
        EXPECT_NEAR(frechet_distance(scalar_moments(m1, s1 * s1), scalar_moments(m2, s2 * s2)), expect, 1e-10);
    }
}

TEST(Frechet, SelfDistanceSymmetryAndSign) {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd x(40, 6), y(30, 6);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = 1.3 * rng.normal() + 0.2;
        const auto a = fit_moments(x), b = fit_moments(y);
        EXPECT_NEAR(frechet_distance(a, a), 0.0, 1e-8);
        EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-8);
        EXPECT_GE(frechet_distance(a, b), 0.0);
    }
    EXPECT_THROW(frechet_distance(scalar_moments(0, 1), fit_moments(Eigen::MatrixXd::Identity(2, 2))),
                 std::invalid_argument);
}

TEST(Frechet, MonteCarloAgainstAnalytic) {
    // Diagonal covariances make the analytic trace term a sum of scalar
    // (s1 - s2)^2 terms.
    const int d = 8;
    Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(d), mu2(d), s1(d), s2(d);
    for (int i = 0; i < d; ++i) {
        mu2(i) = 0.5 + 0.1 * i;
        s1(i) = 1.0;
        s2(i) = 1.5 + 0.1 * i;
    }
    const double analytic = (mu1 - mu2).squaredNorm() + (s1 - s2).squaredNorm();
    Rng rng(6);
    const auto x = gaussian_cloud(10000, mu1, s1.asDiagonal(), rng);
    const auto y = gaussian_cloud(10000, mu2, s2.asDiagonal(), rng);
    const double fid = frechet_distance(fit_moments(x), fit_moments(y));
    EXPECT_NEAR(fid, analytic, 0.02 * analytic);
}

TEST(FeaturesCsv, BitExactRoundTrip) {
    oracle::TempDir dir;
    Rng rng(7);
    FeatureTable t;
    t.ids = {"a", "b", "c"};
    t.features.resize(3, 4);
    for (Eigen::Index i = 0; i < t.features.size(); ++i) t.features.data()[i] = rng.normal() * 1e-3;
    write_features_csv(t, dir / "f.csv");
    const auto back = read_features_csv(dir / "f.csv");
    EXPECT_EQ(back.ids, t.ids);
    EXPECT_EQ(back.features, t.features);
    t.ids[0] = "a,b";
    EXPECT_ANY_THROW(write_features_csv(t, dir / "g.csv"));
}

TEST(FidCurve, DeterministicAndSelfDistance) {
    oracle::TempDir dir;
    nn::DenoiserArch arch;
    arch.base_channels = 4;
    arch.time_embed_dim = 8;
    arch.timesteps = 10;
    const auto model = nn::DenoiserModel::create(arch, nn::InitOptions{1, false});
    nn::save_checkpoint(dir / "c.bin", model, nn::OptimizerState::for_params(model.params(), {}));
    const auto sched = diffusion::linear_schedule(10);
    const auto real = imaging::make_phantom_set(20, 16, 2);
    Embedder e(3, 16);
    const std::vector<CheckpointRef> refs{{1, dir / "c.bin"}};
    const auto a = fid_curve(refs, real, 10, e, 4, sched);
    const auto b = fid_curve(refs, real, 10, e, 4, sched);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].fid, b[0].fid);
    EXPECT_EQ(a[0].checkpoint_index, 1u);
    EXPECT_GT(a[0].fid, 0.0);

    const auto m = fit_moments(embed_set(real, e));
    EXPECT_NEAR(frechet_distance(m, fit_moments(embed_set(real, e))), 0.0, 1e-8);
}
