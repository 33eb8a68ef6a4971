#include <gtest/gtest.h>

#include <cmath>

#include "brute_force.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/common/rng.hpp"
#include "radsynth/imaging/image_io.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/imaging/phantom.hpp"
#include "radsynth/memaudit/review.hpp"
#include "radsynth/memaudit/similarity.hpp"
#include "temp_dir.hpp"

using namespace radsynth;
using namespace radsynth::audit;

namespace {

eval::FeatureTable random_table(const std::string& prefix, std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    eval::FeatureTable t;
    t.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        t.ids.push_back(prefix + std::to_string(i));
        for (std::size_t j = 0; j < d; ++j) t.features(i, j) = rng.normal();
    }
    return t;
}

void expect_same_pairs(const std::vector<SimilarPair>& got, const std::vector<SimilarPair>& want) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].rank, want[i].rank);
        EXPECT_EQ(got[i].real_id, want[i].real_id);
        EXPECT_EQ(got[i].synth_id, want[i].synth_id);
        EXPECT_NEAR(got[i].cosine, want[i].cosine, 1e-12);
    }
}

// Writes a manifest of n phantoms under dir/prefix and returns its path.
std::filesystem::path phantom_manifest(const std::filesystem::path& dir, const std::string& prefix, int n,
                                       std::uint64_t seed) {
    std::filesystem::create_directories(dir / prefix);
    imaging::DatasetManifest m;
    const auto imgs = imaging::make_phantom_set(n, 16, seed);
    for (int i = 0; i < n; ++i) {
        imaging::ManifestEntry e;
        e.source_id = prefix + std::to_string(i);
        e.path = e.source_id + ".png";
        imaging::write_png(imgs[i], dir / prefix / e.path);
        m.entries.push_back(e);
    }
    write_manifest(m, dir / prefix / "manifest.jsonl");
    return dir / prefix / "manifest.jsonl";
}

}  // namespace

TEST(Cosine, Examples) {
    const std::vector<double> a{1, 2, 3}, neg{-1, -2, -3}, o1{1, 0}, o2{0, 5};
    EXPECT_NEAR(cosine_sim(a, a), 1.0, 1e-15);
    EXPECT_NEAR(cosine_sim(a, neg), -1.0, 1e-15);
    EXPECT_EQ(cosine_sim(o1, o2), 0.0);
    EXPECT_THROW(cosine_sim(a, o1), std::invalid_argument);
    EXPECT_THROW(cosine_sim(std::vector<double>{0, 0}, o1), std::invalid_argument);
}

TEST(Cosine, BoundedForRandomInputs) {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> a(5), b(5);
        for (auto& v : a) v = rng.normal() * std::pow(10.0, rng.uniform(-5, 5));
        for (auto& v : b) v = rng.normal() * std::pow(10.0, rng.uniform(-5, 5));
        const double c = cosine_sim(a, b);
        EXPECT_LE(c, 1.0);
        EXPECT_GE(c, -1.0);
        EXPECT_NEAR(c, oracle::naive_cosine(a, b), 1e-12);
    }
}

TEST(TopK, CappedAtCrossProduct) {
    const auto r = random_table("r", 1, 4, 1), s = random_table("s", 1, 4, 2);
    EXPECT_EQ(top_k_pairs(r, s, 5).size(), 1u);
}

TEST(TopK, MatchesBruteForce) {
    for (auto [nr, ns, k] : {std::tuple{20u, 30u, 10u}, {50u, 50u, 100u}, {7u, 3u, 21u}, {50u, 50u, 2500u}}) {
        const auto r = random_table("r", nr, 8, nr * 31 + ns), s = random_table("s", ns, 8, ns * 17 + k);
        const auto want = oracle::brute_top_k(r, s, k);
        expect_same_pairs(top_k_pairs(r, s, k), want);
        expect_same_pairs(top_k_pairs(r, s, k, 3), want);
    }
}

TEST(TopK, PlantedDuplicateRanksFirst) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = random_table("r", 50, 16, seed);
        auto s = random_table("s", 50, 16, seed + 1000);
        const auto pick = static_cast<Eigen::Index>(seed % 50);
        s.features.row(7) = r.features.row(pick);
        const auto top = top_k_pairs(r, s, 5);
        EXPECT_EQ(top[0].real_id, r.ids[pick]);
        EXPECT_EQ(top[0].synth_id, "s7");
        EXPECT_EQ(top[0].cosine, 1.0);
    }
}

TEST(TopK, TiesBrokenByIds) {
    eval::FeatureTable r, s;
    r.ids = {"b", "a"};
    r.features = Eigen::MatrixXd::Ones(2, 3);
    s.ids = {"y", "x"};
    s.features = Eigen::MatrixXd::Ones(2, 3);
    const auto top = top_k_pairs(r, s, 4);
    EXPECT_EQ(top[0].real_id, "a");
    EXPECT_EQ(top[0].synth_id, "x");
    EXPECT_EQ(top[1].real_id, "a");
    EXPECT_EQ(top[1].synth_id, "y");
    EXPECT_EQ(top[3].real_id, "b");
}

TEST(TopK, PairsFileRoundTrip) {
    oracle::TempDir dir;
    const auto pairs = top_k_pairs(random_table("r", 5, 3, 1), random_table("s", 5, 3, 2), 4);
    write_pairs(pairs, dir / "p.jsonl");
    EXPECT_EQ(read_pairs(dir / "p.jsonl"), pairs);
}

TEST(Review, ComposeLayout) {
    const auto imgs = imaging::make_phantom_set(2, 16, 3);
    const auto c = compose_pair(imgs[0], imgs[1], 12, 0.98765);
    EXPECT_EQ(c.width(), 32);
    EXPECT_EQ(c.height(), 16 + footer_height());
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            EXPECT_EQ(c.at(x, y), imgs[0].at(x, y));
            EXPECT_EQ(c.at(16 + x, y), imgs[1].at(x, y));
        }
    EXPECT_THROW(compose_pair(imgs[0], imaging::GrayImage(16, 8), 1, 0.5), std::invalid_argument);
}

TEST(Review, BundleCardinalityAndDeterminism) {
    oracle::TempDir dir;
    const auto rm = phantom_manifest(dir.path(), "r", 3, 1);
    const auto sm = phantom_manifest(dir.path(), "s", 3, 2);
    const std::vector<SimilarPair> pairs{{1, "r0", "s2", 0.9}, {2, "r1", "s0", 0.8}};
    const auto entries = build_review_bundle(pairs, {rm, sm}, dir / "b1");
    ASSERT_EQ(entries.size(), 2u);
    for (const auto& e : entries) {
        const auto img = imaging::read_png(dir / "b1" / e.file);
        EXPECT_EQ(img.width(), 32);
    }
    EXPECT_EQ(read_bundle_index(dir / "b1" / "index.jsonl").size(), 2u);
    build_review_bundle(pairs, {rm, sm}, dir / "b2");
    EXPECT_EQ(read_text_file(dir / "b1" / "index.jsonl"), read_text_file(dir / "b2" / "index.jsonl"));
    EXPECT_EQ(read_file_bytes(dir / "b1" / entries[0].file), read_file_bytes(dir / "b2" / entries[0].file));
}

TEST(Review, MissingImageWritesNothing) {
    oracle::TempDir dir;
    const auto rm = phantom_manifest(dir.path(), "r", 2, 1);
    const std::vector<SimilarPair> pairs{{1, "r0", "r1", 0.9}, {2, "r0", "missing", 0.8}};
    EXPECT_ANY_THROW(build_review_bundle(pairs, {rm}, dir / "b"));
    EXPECT_FALSE(std::filesystem::exists(dir / "b" / "index.jsonl"));
    EXPECT_FALSE(std::filesystem::exists(dir / "b" / "pair_0001.png"));
}

TEST(VerdictLog, TwoReviewersPerPair) {
    VerdictLog log;
    log.add({1, "alice", Verdict::NotMemorized, ""});
    EXPECT_FALSE(log.complete(1));
    EXPECT_THROW(log.add({1, "alice", Verdict::ExplicitMemorization, ""}), std::invalid_argument);
    log.add({1, "bob", Verdict::ExplicitMemorization, "same vertebra outline"});
    EXPECT_TRUE(log.complete(1));
    EXPECT_THROW(log.add({1, "carol", Verdict::NotMemorized, ""}), std::invalid_argument);
    EXPECT_THROW(log.add({0, "carol", Verdict::NotMemorized, ""}), std::invalid_argument);
    EXPECT_THROW(log.add({2, "", Verdict::NotMemorized, ""}), std::invalid_argument);
    EXPECT_EQ(log.flagged(), std::vector<std::size_t>{1});
    EXPECT_EQ(log.all().size(), 2u);
}

TEST(VerdictLog, FileRoundTrip) {
    oracle::TempDir dir;
    VerdictLog log;
    log.add({3, "a", Verdict::NotMemorized, "note, with comma"});
    log.add({3, "b", Verdict::NotMemorized, ""});
    write_verdicts(log, dir / "v.jsonl");
    EXPECT_EQ(read_verdicts(dir / "v.jsonl").all(), log.all());
    EXPECT_EQ(parse_verdict(to_string(Verdict::ExplicitMemorization)), Verdict::ExplicitMemorization);
    EXPECT_ANY_THROW(parse_verdict("maybe"));
}
