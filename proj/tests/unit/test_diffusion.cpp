#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "radsynth/common/digest.hpp"
#include "radsynth/common/rng.hpp"
#include "radsynth/diffusion/data.hpp"
#include "radsynth/diffusion/sampler.hpp"
#include "radsynth/diffusion/schedule.hpp"
#include "radsynth/diffusion/trainer.hpp"
#include "radsynth/neuralcore/gradcheck.hpp"
#include "radsynth/imaging/phantom.hpp"
#include "temp_dir.hpp"

using namespace radsynth;
using namespace radsynth::diffusion;

namespace {

nn::DenoiserArch tiny_arch(std::uint32_t timesteps) {
    nn::DenoiserArch a;
    a.base_channels = 4;
    a.num_down_levels = 2;
    a.time_embed_dim = 8;
    a.timesteps = timesteps;
    return a;
}

imaging::DatasetManifest manifest_of(std::size_t n) {
    imaging::DatasetManifest m;
    for (std::size_t i = 0; i < n; ++i) {
        imaging::ManifestEntry e;
        e.source_id = "img" + std::to_string(i);
        e.path = e.source_id + ".png";
        m.entries.push_back(e);
    }
    return m;
}

}  // namespace

TEST(Schedule, TwoStepHandValues) {
    const auto s = linear_schedule(2, 0.1, 0.2);
    EXPECT_DOUBLE_EQ(s.beta(1), 0.1);
    EXPECT_DOUBLE_EQ(s.beta(2), 0.2);
    EXPECT_NEAR(s.alpha_bar(1), 0.9, 1e-15);
    EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
}

TEST(Schedule, DefaultTailAndMonotone) {
    const auto s = linear_schedule(1000);
    EXPECT_LT(s.alpha_bar(1000), 0.01);
    double direct = 1.0;
    for (int t = 1; t <= 1000; ++t) direct *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
    EXPECT_NEAR(s.alpha_bar(1000), direct, 1e-15);
    for (int t = 2; t <= 1000; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
}

TEST(Schedule, RejectsInvalid) {
    EXPECT_THROW(linear_schedule(1), std::invalid_argument);
    EXPECT_THROW(linear_schedule(10, 0.2, 0.1), std::invalid_argument);
    EXPECT_THROW(linear_schedule(10, 0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(NoiseSchedule::from_betas({0.5, 1.0}), std::invalid_argument);
}

TEST(Split, PaperSizes) {
    const auto [train, val] = train_val_split(manifest_of(4963), 0.15, 3);
    EXPECT_EQ(train.size(), 4219u);
    EXPECT_EQ(val.size(), 744u);
    std::set<std::string> ids;
    for (const auto& e : train) ids.insert(e.source_id);
    for (const auto& e : val) ids.insert(e.source_id);
    EXPECT_EQ(ids.size(), 4963u);
}

TEST(Split, RoundsHalfUp) {
    const auto s = split_indices(10, 0.15, 1);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.val.size(), 2u);
}

TEST(Split, DeterministicAndZeroFraction) {
    const auto a = split_indices(100, 0.2, 9);
    const auto b = split_indices(100, 0.2, 9);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    EXPECT_NE(a.val, split_indices(100, 0.2, 10).val);
    EXPECT_TRUE(split_indices(10, 0.0, 1).val.empty());
}

TEST(QSample, ScalarCases) {
    EXPECT_NEAR(q_sample_value(2.0, 1.0, 0.25), 1.0 + std::sqrt(0.75), 1e-15);
    EXPECT_NEAR(q_sample_value(2.0, 1.0, 0.25), 1.8660, 1e-4);
    EXPECT_EQ(q_sample_value(0.3, -1.7, 1.0), 0.3);
    EXPECT_EQ(q_sample_value(0.3, -1.7, 0.0), -1.7);
}

TEST(QSample, ForwardVarianceIsOne) {
    const auto s = linear_schedule(1000);
    Rng rng(5);
    for (int t : {1, 500, 1000}) {
        double sum = 0, sq = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const double v = q_sample_value(rng.normal(), rng.normal(), s.alpha_bar(t));
            sum += v;
            sq += v * v;
        }
        const double var = sq / n - (sum / n) * (sum / n);
        EXPECT_NEAR(var, 1.0, 0.05) << "t=" << t;
    }
}

TEST(QSample, TensorMatchesScalarFormula) {
    const auto s = linear_schedule(10);
    nn::Tensor4 x0({2, 1, 2, 2}, 0.5), eps({2, 1, 2, 2}, -1.0);
    const std::vector<int> t{1, 10};
    const auto xt = q_sample(x0, t, eps, s);
    EXPECT_EQ(xt.at(0, 0, 1, 1), q_sample_value(0.5, -1.0, s.alpha_bar(1)));
    EXPECT_EQ(xt.at(1, 0, 0, 0), q_sample_value(0.5, -1.0, s.alpha_bar(10)));
    EXPECT_THROW(q_sample(x0, std::vector<int>{0, 1}, eps, s), std::invalid_argument);
}

TEST(PSample, ScalarFormula) {
    const double v = p_sample_value(1.0, 0.2, 0.96, 0.04, 0.5, 0.0, 0.0);
    EXPECT_NEAR(v, (1.0 - 0.04 / std::sqrt(0.5) * 0.2) / std::sqrt(0.96), 1e-15);
    // Hand evaluation: 0.04 / 0.7071068 * 0.2 = 0.0113137; 0.9886863 / 0.9797959.
    EXPECT_NEAR(v, 1.0090737, 1e-7);
    EXPECT_EQ(p_sample_value(0.7, 0.0, 1.0, 0.0, 0.5, 0.0, 0.0), 0.7);
}

TEST(PSample, OneStepRoundTrip) {
    const auto s = NoiseSchedule::from_betas({0.5});
    Rng rng(6);
    nn::Tensor4 x0({1, 1, 4, 4}), eps({1, 1, 4, 4}), z({1, 1, 4, 4});
    for (auto& v : x0.values()) v = rng.uniform(-1, 1);
    for (auto& v : eps.values()) v = rng.normal();
    for (auto& v : z.values()) v = rng.normal();
    const std::vector<int> t{1};
    const auto xt = q_sample(x0, t, eps, s);
    const auto back = p_sample_step(xt, 1, eps, s, &z);  // z ignored at t=1
    for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(back.values()[i], x0.values()[i], 1e-10);
}

TEST(Data, PixelMapping) {
    EXPECT_EQ(pixel_to_unit(0), -1.0);
    EXPECT_EQ(pixel_to_unit(255), 1.0);
    EXPECT_EQ(unit_to_pixel(-5.0), 0);
    EXPECT_EQ(unit_to_pixel(5.0), 255);
    EXPECT_EQ(unit_to_pixel(0.0), 128);  // 127.5 rounds up
    for (int p = 0; p < 256; ++p) EXPECT_EQ(unit_to_pixel(pixel_to_unit(static_cast<std::uint8_t>(p))), p);
}

TEST(Loss, ZeroOutputModelHasUnitLoss) {
    const auto sched = linear_schedule(1000);
    const auto model = nn::DenoiserModel::create(tiny_arch(1000), nn::InitOptions{1, true});
    const auto images = imaging::make_phantom_set(8, 16, 2);
    const auto batch = images_to_tensor(images);
    Rng rng(3);
    const auto step = loss_step(model, batch, sched, rng);
    EXPECT_GE(step.loss, 0.85);
    EXPECT_LE(step.loss, 1.15);
    Rng again(3);
    EXPECT_EQ(loss_step(model, batch, sched, again).loss, step.loss);
}

TEST(Loss, ExactNoisePredictionHasZeroLoss) {
    // The objective is MSE between eps and the prediction, so handing the
    // drawn noise back as the prediction must score exactly zero.
    const auto sched = linear_schedule(50);
    const auto x0 = images_to_tensor(imaging::make_phantom_set(4, 8, 4));
    Rng rng(5);
    const auto nb = draw_noised_batch(x0, sched, rng);
    EXPECT_EQ(nn::mse_loss(nb.eps, nb.eps), 0.0);
    for (int t : nb.t) {
        EXPECT_GE(t, 1);
        EXPECT_LE(t, 50);
    }
}

TEST(Train, CheckpointCadence) {
    oracle::TempDir dir;
    const auto images = imaging::make_phantom_set(6, 8, 7);
    const auto sched = linear_schedule(20);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.max_steps = 4;
    cfg.checkpoint_interval = 2;
    cfg.arch = tiny_arch(20);
    const auto val = imaging::make_phantom_set(2, 8, 8);
    const auto result = train(images, val, cfg, sched, dir.path());
    ASSERT_EQ(result.records.size(), 2u);
    EXPECT_EQ(result.step_losses.size(), 4u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(result.records[i].checkpoint_index, i + 1);
        EXPECT_EQ(result.records[i].step, (i + 1) * cfg.checkpoint_interval);
        EXPECT_TRUE(result.records[i].val_loss.has_value());
        EXPECT_TRUE(std::filesystem::exists(dir / checkpoint_file_name(i + 1).string()));
    }
    const auto log = read_checkpoint_log(dir.path());
    ASSERT_EQ(log.size(), 2u);
    EXPECT_EQ(log[1].step, 4u);
}

TEST(Train, NoValidationSet) {
    oracle::TempDir dir;
    const auto images = imaging::make_phantom_set(4, 8, 9);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.max_steps = 2;
    cfg.checkpoint_interval = 1;
    cfg.val_fraction = 0.0;
    cfg.arch = tiny_arch(20);
    const auto result = train(images, {}, cfg, linear_schedule(20), dir.path());
    for (const auto& r : result.records) EXPECT_FALSE(r.val_loss.has_value());
}

TEST(Train, DeterministicPerSeed) {
    oracle::TempDir a, b;
    const auto images = imaging::make_phantom_set(6, 8, 10);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.max_steps = 3;
    cfg.checkpoint_interval = 3;
    cfg.seed = 4;
    cfg.arch = tiny_arch(20);
    const auto sched = linear_schedule(20);
    const auto ra = train(images, {}, cfg, sched, a.path());
    const auto rb = train(images, {}, cfg, sched, b.path());
    EXPECT_EQ(ra.step_losses, rb.step_losses);
    EXPECT_EQ(read_file_bytes(a / "ckpt_0001.bin"), read_file_bytes(b / "ckpt_0001.bin"));
}

TEST(Train, RejectsTooFewImages) {
    oracle::TempDir dir;
    const auto images = imaging::make_phantom_set(1, 8, 1);
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.arch = tiny_arch(20);
    EXPECT_THROW(train(images, {}, cfg, linear_schedule(20), dir.path()), std::invalid_argument);
}

TEST(Sample, DeterministicAndTagged) {
    const auto sched = linear_schedule(10);
    const auto model = nn::DenoiserModel::create(tiny_arch(10), nn::InitOptions{2, false});
    const auto a = sample(model, sched, 3, 42, 5, 8);
    const auto b = sample(model, sched, 3, 42, 5, 8);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_TRUE(a[i].same_pixels(b[i]));
        EXPECT_EQ(a[i].meta.origin, imaging::Origin::Synthetic);
        EXPECT_EQ(a[i].meta.checkpoint, 5);
    }
}

TEST(Sample, IndependentOfBatching) {
    const auto sched = linear_schedule(10);
    const auto model = nn::DenoiserModel::create(tiny_arch(10), nn::InitOptions{3, false});
    SampleRequest whole{5, 8, 11};
    whole.batch_size = 5;
    const auto all = sample(model, sched, whole);
    SampleRequest tail{2, 8, 11, 3};
    tail.batch_size = 1;
    const auto part = sample(model, sched, tail);
    ASSERT_EQ(part.size(), 2u);
    EXPECT_TRUE(part[0].same_pixels(all[3]));
    EXPECT_TRUE(part[1].same_pixels(all[4]));
}

TEST(Sample, ZeroModelMatchesNoiseOnlyRecursion) {
    // With eps_hat = 0 each pixel follows x <- x / sqrt(alpha) + sqrt(beta) z
    // independently; simulate that scalar recursion as the reference.
    const auto sched = linear_schedule(30);
    const auto model = nn::DenoiserModel::create(tiny_arch(30), nn::InitOptions{4, true});
    const auto images = sample(model, sched, 40, 6, std::nullopt, 8);
    double mean = 0.0, sat = 0.0;
    std::size_t count = 0;
    for (const auto& img : images)
        for (auto p : img.pixels()) {
            mean += p;
            sat += (p == 0 || p == 255);
            ++count;
        }
    mean /= count;
    sat /= count;

    Rng rng(99);
    double ref_mean = 0.0, ref_sat = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        for (int t = 30; t >= 1; --t) {
            x /= std::sqrt(sched.alpha(t));
            if (t > 1) x += std::sqrt(sched.beta(t)) * rng.normal();
        }
        const auto p = unit_to_pixel(x);
        ref_mean += p;
        ref_sat += (p == 0 || p == 255);
    }
    ref_mean /= n;
    ref_sat /= n;
    EXPECT_NEAR(mean, 127.5, 4.0);
    EXPECT_NEAR(mean, ref_mean, 5.0);
    EXPECT_NEAR(sat, ref_sat, 0.04);
}
