#include <gtest/gtest.h>

#include <set>

#include "radsynth/common/rng.hpp"
#include "radsynth/imaging/image_io.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/imaging/phantom.hpp"
#include "radsynth/imaging/transforms.hpp"
#include "temp_dir.hpp"

using namespace radsynth::imaging;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
    radsynth::Rng rng(seed);
    GrayImage img(w, h);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

GrayImage center_border(int size, std::uint8_t center, std::uint8_t border) {
    GrayImage img(size, size, border);
    for (int y = size / 4; y < size * 3 / 4; ++y)
        for (int x = size / 4; x < size * 3 / 4; ++x) img.at(x, y) = center;
    return img;
}

}  // namespace

TEST(GrayImage, PixelCountMatchesExtent) {
    GrayImage img(5, 3, 9);
    EXPECT_EQ(img.pixels().size(), 15u);
    EXPECT_THROW(GrayImage(2, 2, std::vector<std::uint8_t>(3)), std::invalid_argument);
}

TEST(GrayImage, ToGrayRoundsHalfUpAndClamps) {
    EXPECT_EQ(to_gray(127.5), 128);
    EXPECT_EQ(to_gray(127.49), 127);
    EXPECT_EQ(to_gray(-3.0), 0);
    EXPECT_EQ(to_gray(300.0), 255);
}

TEST(Resample, ConstantImageStaysConstant) {
    const auto out = resample(GrayImage(4, 4, 100), 2, 2);
    EXPECT_TRUE(out.same_pixels(GrayImage(2, 2, 100)));
    for (int s : {1, 3, 7, 13}) {
        EXPECT_TRUE(resample(GrayImage(5, 9, 77), s, s + 2).same_pixels(GrayImage(s, s + 2, 77)));
    }
}

TEST(Resample, SameSizeIsIdentity) {
    GrayImage img(2, 2, std::vector<std::uint8_t>{3, 200, 45, 17});
    EXPECT_TRUE(resample(img, 2, 2).same_pixels(img));
    const auto big = random_image(11, 6, 3);
    EXPECT_TRUE(resample(big, 11, 6).same_pixels(big));
}

TEST(Resample, CenterSampleRoundsHalfUp) {
    // Sampling at the center averages 0 and 255 to 127.5, which rounds up.
    GrayImage img(2, 2, std::vector<std::uint8_t>{0, 255, 0, 255});
    const auto out = resample(img, 1, 1);
    ASSERT_EQ(out.width(), 1);
    EXPECT_EQ(out.at(0, 0), 128);
}

TEST(Resample, RejectsEmptyAndZeroTargets) {
    EXPECT_THROW(resample(GrayImage(), 2, 2), std::invalid_argument);
    EXPECT_THROW(resample(GrayImage(2, 2), 0, 2), std::invalid_argument);
    EXPECT_THROW(resample(GrayImage(2, 2), 2, 0), std::invalid_argument);
}

TEST(Invert, Examples) {
    EXPECT_TRUE(invert(GrayImage(3, 3, 0)).same_pixels(GrayImage(3, 3, 255)));
    EXPECT_EQ(invert(GrayImage(1, 1, 100)).at(0, 0), 155);
}

TEST(Invert, InvolutionAndMetaToggle) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto img = random_image(7, 5, s);
        const auto once = invert(img);
        EXPECT_TRUE(once.meta.inverted.value());
        const auto twice = invert(once);
        EXPECT_TRUE(twice.same_pixels(img));
        EXPECT_FALSE(twice.meta.inverted.value());
    }
}

TEST(DetectNegative, UniformIsNotNegative) {
    EXPECT_FALSE(detect_negative(GrayImage(20, 20, 90)));
}

TEST(DetectNegative, BoneDarkPolarity) {
    // Bright anatomy on a dark frame is the normal polarity; a bright frame
    // around dark anatomy is a negative.
    const auto normal = center_border(20, 200, 20);
    const auto rm = region_means(normal);
    EXPECT_DOUBLE_EQ(rm.center, 200.0);
    EXPECT_DOUBLE_EQ(rm.border, 20.0);
    EXPECT_FALSE(detect_negative(normal));
    EXPECT_TRUE(detect_negative(center_border(20, 20, 200)));
}

TEST(DetectNegative, FlipsUnderInversionWhenMeansDiffer) {
    int checked = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto img = random_image(10 + static_cast<int>(s % 7), 12, s);
        const auto rm = region_means(img);
        if (rm.center == rm.border) continue;
        EXPECT_NE(detect_negative(invert(img)), detect_negative(img)) << "seed " << s;
        ++checked;
    }
    EXPECT_GT(checked, 150);
}

TEST(Orientation, RightFacingIsMirrored) {
    GrayImage img(3, 2, std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6});
    img.meta.facing = Facing::Right;
    const auto r = standardize_orientation(img, Facing::Right);
    EXPECT_TRUE(r.image.same_pixels(GrayImage(3, 2, std::vector<std::uint8_t>{3, 2, 1, 6, 5, 4})));
    EXPECT_EQ(r.image.meta.facing, Facing::Left);
    EXPECT_FALSE(r.needs_triage);
}

TEST(Orientation, LeftIsNoOpAndUnknownIsFlagged) {
    const auto img = random_image(6, 4, 1);
    const auto left = standardize_orientation(img, Facing::Left);
    EXPECT_TRUE(left.image.same_pixels(img));
    EXPECT_FALSE(left.needs_triage);
    const auto unknown = standardize_orientation(img, Facing::Unknown);
    EXPECT_TRUE(unknown.image.same_pixels(img));
    EXPECT_TRUE(unknown.needs_triage);
}

TEST(Orientation, MirrorInvolution) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto img = random_image(9, 4, s);
        EXPECT_TRUE(mirror(mirror(img)).same_pixels(img));
    }
}

TEST(Phantom, DeterministicPerSeed) {
    const auto a = make_phantom_set(2, 16, 7);
    const auto b = make_phantom_set(2, 16, 7);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].same_pixels(b[i]));
    EXPECT_FALSE(make_phantom_set(1, 16, 8)[0].same_pixels(a[0]));
}

TEST(Phantom, HundredDistinctImages) {
    const auto set = make_phantom_set(100, 16, 1);
    ASSERT_EQ(set.size(), 100u);
    std::set<std::vector<std::uint8_t>> unique;
    for (const auto& img : set) {
        EXPECT_EQ(img.width(), 16);
        EXPECT_EQ(img.height(), 16);
        unique.insert(img.pixels());
    }
    EXPECT_EQ(unique.size(), 100u);
}

TEST(Phantom, NormalPolarity) {
    // Phantoms render bone bright, so none should look negative.
    for (const auto& img : make_phantom_set(50, 32, 4)) EXPECT_FALSE(detect_negative(img));
}

TEST(Phantom, RejectsBadArguments) {
    EXPECT_THROW(make_phantom_set(0, 16, 1), std::invalid_argument);
    EXPECT_THROW(make_phantom_set(1, 7, 1), std::invalid_argument);
}

TEST(ImageIo, PngAndPgmRoundTrip) {
    radsynth::oracle::TempDir dir;
    const auto img = random_image(13, 9, 5);
    write_png(img, dir / "a.png");
    write_pgm(img, dir / "a.pgm");
    EXPECT_TRUE(read_png(dir / "a.png").same_pixels(img));
    EXPECT_TRUE(read_pgm(dir / "a.pgm").same_pixels(img));
    EXPECT_TRUE(read_image(dir / "a.png").same_pixels(img));
    EXPECT_TRUE(read_image(dir / "a.pgm").same_pixels(img));
    EXPECT_TRUE(decode_png(encode_png(img)).same_pixels(img));
}

TEST(Manifest, RoundTripAndValidation) {
    radsynth::oracle::TempDir dir;
    DatasetManifest m;
    m.seed = 42;
    m.entries.push_back({"a", "a.png", Origin::Real, std::nullopt, Facing::Left, false, TriageStatus::Accepted, {}});
    m.entries.push_back({"b", "b.png", Origin::Synthetic, 3, Facing::Unknown, std::nullopt, TriageStatus::Rejected,
                         std::string("implausible anatomy")});
    write_manifest(m, dir / "m.jsonl");
    EXPECT_EQ(read_manifest(dir / "m.jsonl"), m);
    EXPECT_EQ(m.usable().size(), 1u);
    EXPECT_EQ(m.count(TriageStatus::Rejected), 1u);

    auto dup = m;
    dup.entries[1].source_id = "a";
    EXPECT_THROW(dup.validate(), std::invalid_argument);
    auto no_reason = m;
    no_reason.entries[1].reject_reason.reset();
    EXPECT_THROW(no_reason.validate(), std::invalid_argument);
}
