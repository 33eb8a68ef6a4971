#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <map>
#include "json.hpp"
#include <set>

#include "brute_force.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/common/rng.hpp"
#include "radsynth/turingstats/quartet.hpp"
#include "radsynth/turingstats/report.hpp"
#include "radsynth/turingstats/responses.hpp"
#include "radsynth/turingstats/stats.hpp"
#include "temp_dir.hpp"

using namespace radsynth;
using namespace radsynth::turing;

namespace {

std::vector<std::string> pool(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<Quartet> make_quartets(int n, std::uint64_t seed) {
    return build_quartets(pool("real", n), {pool("a", n), pool("b", n), pool("c", n)}, n, seed);
}

ResponseRecord response(const std::string& rater, const Quartet& q, int slot, std::array<int, 4> ratings) {
    return {rater, q.quartet_id, slot, ratings, "2024-01-01T00:00:00Z"};
}

// Survival function of chi-square with 3 degrees of freedom.
double chi2_sf_3(double x) {
    return std::erfc(std::sqrt(x / 2.0)) + std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0);
}

}  // namespace

TEST(Quartets, EveryPoolImageUsedOnce) {
    const auto qs = make_quartets(50, 3);
    ASSERT_EQ(qs.size(), 50u);
    std::set<std::string> seen;
    for (const auto& q : qs) {
        q.validate();
        EXPECT_EQ(q.slots[q.hidden_truth - 1].rfind("real", 0), 0u);
        for (const auto& s : q.slots) seen.insert(s);
    }
    EXPECT_EQ(seen.size(), 200u);
}

TEST(Quartets, DeterministicPerSeed) {
    EXPECT_EQ(make_quartets(20, 8), make_quartets(20, 8));
    EXPECT_NE(make_quartets(20, 8), make_quartets(20, 9));
}

TEST(Quartets, RejectsSmallOrOverlappingPools) {
    EXPECT_THROW(build_quartets(pool("r", 3), {pool("a", 5), pool("b", 5), pool("c", 5)}, 5, 1),
                 std::invalid_argument);
    EXPECT_THROW(build_quartets(pool("r", 5), {pool("r", 5), pool("b", 5), pool("c", 5)}, 5, 1),
                 std::invalid_argument);
}

TEST(Quartets, RealSlotIsUniform) {
    std::array<double, 4> counts{};
    int draws = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed)
        for (const auto& q : make_quartets(50, seed)) {
            counts[q.hidden_truth - 1] += 1;
            ++draws;
        }
    ASSERT_EQ(draws, 10000);
    double stat = 0.0;
    for (double c : counts) stat += (c - 2500.0) * (c - 2500.0) / 2500.0;
    EXPECT_GT(chi2_sf_3(stat), 0.001) << "chi2=" << stat;
}

TEST(Quartets, RaterFileIsBlind) {
    oracle::TempDir dir;
    const auto qs = make_quartets(10, 4);
    write_quartets(qs, dir / "q.jsonl", dir / "k.jsonl");
    const auto text = read_text_file(dir / "q.jsonl");
    for (const char* word : {"hidden_truth", "groups", "ckpt", "\"real\"", "origin", "checkpoint"})
        EXPECT_EQ(text.find(word), std::string::npos) << word;
    EXPECT_EQ(read_quartets(dir / "q.jsonl", dir / "k.jsonl"), qs);
    EXPECT_EQ(read_blind_quartets(dir / "q.jsonl").size(), 10u);
}

TEST(Accuracy, PaperAnchorAndExtremes) {
    const auto qs = make_quartets(50, 5);
    std::vector<ResponseRecord> rs;
    int correct = 0;
    for (int r = 0; r < 8; ++r)
        for (const auto& q : qs) {
            const bool hit = correct < 116;
            correct += hit;
            rs.push_back(response("r" + std::to_string(r), q, hit ? q.hidden_truth : q.hidden_truth % 4 + 1,
                                  {1, 2, 3, 4}));
        }
    EXPECT_DOUBLE_EQ(identification_accuracy(rs, qs), 0.29);

    std::vector<ResponseRecord> reversed(rs.rbegin(), rs.rend());
    EXPECT_DOUBLE_EQ(identification_accuracy(reversed, qs), 0.29);

    for (auto& r : rs) r.chosen_slot = index_quartets(qs).at(r.quartet_id)->hidden_truth;
    EXPECT_EQ(identification_accuracy(rs, qs), 1.0);
    EXPECT_ANY_THROW(identification_accuracy(std::vector<ResponseRecord>{}, qs));
}

TEST(Kappa, HandExamples) {
    EXPECT_EQ(fleiss_kappa(AgreementTable{{{2, 0}, {0, 2}}}), 1.0);
    EXPECT_NEAR(fleiss_kappa(AgreementTable{{{2, 0}, {1, 1}}}), -1.0 / 3.0, 1e-12);
    EXPECT_THROW(fleiss_kappa(AgreementTable{{{1, 0}, {0, 1}}}), std::invalid_argument);
    EXPECT_THROW(fleiss_kappa(AgreementTable{{{2, 0}, {1, 2}}}), std::invalid_argument);
    EXPECT_THROW(fleiss_kappa(AgreementTable{{{3, 0}, {3, 0}}}), std::domain_error);
}

TEST(Kappa, InvariantUnderRelabelingAndItemOrder) {
    Rng rng(6);
    for (int rep = 0; rep < 200; ++rep) {
        const int items = 2 + static_cast<int>(rng.index(10)), raters = 2 + static_cast<int>(rng.index(6));
        AgreementTable t;
        for (int i = 0; i < items; ++i) {
            std::vector<int> row(4, 0);
            for (int r = 0; r < raters; ++r) row[rng.index(4)]++;
            t.counts.push_back(row);
        }
        double k;
        try {
            k = fleiss_kappa(t);
        } catch (const std::domain_error&) {
            continue;
        }
        std::array<int, 4> perm{0, 1, 2, 3};
        for (std::size_t i = 3; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
        AgreementTable relabeled = t;
        for (auto& row : relabeled.counts) {
            std::vector<int> out(4);
            for (int j = 0; j < 4; ++j) out[perm[j]] = row[j];
            row = out;
        }
        std::reverse(relabeled.counts.begin(), relabeled.counts.end());
        EXPECT_NEAR(fleiss_kappa(relabeled), k, 1e-12);
    }
}

TEST(Kappa, PerfectAgreementAcrossCategories) {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        AgreementTable t;
        std::set<int> used;
        for (int i = 0; i < 6; ++i) {
            std::vector<int> row(4, 0);
            const int c = static_cast<int>(rng.index(4));
            row[c] = 5;
            used.insert(c);
            t.counts.push_back(row);
        }
        if (used.size() < 2) continue;
        EXPECT_EQ(fleiss_kappa(t), 1.0);
    }
}

TEST(GroupMeans, Examples) {
    const auto qs = make_quartets(2, 9);
    std::vector<ResponseRecord> rs;
    for (const auto& q : qs) rs.push_back(response("solo", q, 1, {4, 4, 4, 4}));
    auto m = rater_group_means(rs, qs);
    ASSERT_EQ(m.size(), 1u);
    for (double v : m[0].means) EXPECT_EQ(v, 4.0);

    rs[0].ratings[qs[0].hidden_truth - 1] = 3;
    m = rater_group_means(rs, qs);
    EXPECT_EQ(m[0].means[static_cast<int>(Group::Real)], 3.5);
    EXPECT_EQ(m[0].quartets, 2u);
}

TEST(Wilcoxon, Examples) {
    const std::vector<double> zero(3, 0.0), x{1, 2, 3};
    auto r = wilcoxon_signed_rank(x, zero);
    EXPECT_EQ(r.statistic, 6.0);
    EXPECT_EQ(r.p_two_sided, 0.25);
    EXPECT_EQ(r.method, WilcoxonMethod::Exact);

    r = wilcoxon_signed_rank(x, x);
    EXPECT_TRUE(r.zero_only);
    EXPECT_EQ(r.p_two_sided, 1.0);
    EXPECT_EQ(r.n_effective, 0u);

    r = wilcoxon_signed_rank(std::vector<double>{1, -1}, std::vector<double>{0, 0});
    EXPECT_EQ(r.statistic, 1.5);
    EXPECT_EQ(r.p_two_sided, 1.0);
    EXPECT_THROW(wilcoxon_signed_rank(x, std::vector<double>{1}), std::invalid_argument);
}

TEST(Wilcoxon, NullCountsSumToPowerOfTwo) {
    for (std::size_t n = 0; n <= 25; ++n) {
        const auto c = signed_rank_null_counts(n);
        EXPECT_EQ(c.size(), n * (n + 1) / 2 + 1);
        std::uint64_t total = 0;
        for (auto v : c) total += v;
        EXPECT_EQ(total, std::uint64_t{1} << n);
        for (std::size_t s = 0; s < c.size(); ++s) EXPECT_EQ(c[s], c[c.size() - 1 - s]);
    }
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
    Rng rng(8);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rng.index(10);
        std::vector<double> d(n), zero(n, 0.0);
        for (;;) {
            for (auto& v : d) v = rng.uniform(-2, 2);
            std::set<double> mags;
            for (double v : d) mags.insert(std::abs(v));
            if (mags.size() == n && !mags.count(0.0)) break;
        }
        const auto r = wilcoxon_signed_rank(d, zero);
        const auto [ranks, w] = oracle::plain_ranks(d);
        EXPECT_EQ(r.method, WilcoxonMethod::Exact);
        EXPECT_EQ(r.statistic, w);
        EXPECT_EQ(r.p_two_sided, oracle::enumerate_signed_rank_p(ranks, w));
    }
}

TEST(Wilcoxon, TiesUseNormalApproximation) {
    const std::vector<double> d{1, 1, 2, 3, -4, 5, 6, 7}, zero(8, 0.0);
    const auto r = wilcoxon_signed_rank(d, zero);
    EXPECT_EQ(r.method, WilcoxonMethod::NormalApprox);
    // Mid-ranks 1.5, 1.5 and W = 36 - 5 = 31; tie correction (2^3 - 2) / 48.
    EXPECT_EQ(r.statistic, 31.0);
    const double mean = 8 * 9 / 4.0, var = 8 * 9 * 17 / 24.0 - 6.0 / 48.0;
    const double z = (mean - 31.0 + 0.5) / std::sqrt(var);
    const double p_ge = 0.5 * std::erfc(-z / std::sqrt(2.0));
    EXPECT_NEAR(r.p_two_sided, std::min(1.0, 2.0 * p_ge), 1e-12);
}

TEST(Wilcoxon, LargeSampleUsesNormalApproximation) {
    std::vector<double> d(30), zero(30, 0.0);
    for (int i = 0; i < 30; ++i) d[i] = (i % 3 == 0 ? -1 : 1) * (i + 1.0);
    const auto r = wilcoxon_signed_rank(d, zero);
    EXPECT_EQ(r.method, WilcoxonMethod::NormalApprox);
    EXPECT_GT(r.p_two_sided, 0.0);
    EXPECT_LE(r.p_two_sided, 1.0);
}

TEST(Holm, Examples) {
    const auto p = holm_adjust(std::vector<double>{0.128, 0.236, 1.0});
    EXPECT_NEAR(p[0], 0.384, 1e-12);
    EXPECT_NEAR(p[1], 0.472, 1e-12);
    EXPECT_EQ(p[2], 1.0);
    EXPECT_EQ(holm_adjust(std::vector<double>{0.2}), std::vector<double>{0.2});
    const auto q = holm_adjust(std::vector<double>{0.01, 0.04, 0.03});
    EXPECT_NEAR(q[0], 0.03, 1e-15);
    EXPECT_NEAR(q[1], 0.06, 1e-15);
    EXPECT_NEAR(q[2], 0.06, 1e-15);
    EXPECT_THROW(holm_adjust(std::vector<double>{0.0}), std::invalid_argument);
    EXPECT_THROW(holm_adjust(std::vector<double>{1.5}), std::invalid_argument);
}

TEST(Holm, MonotoneBoundedAndDominating) {
    Rng rng(9);
    for (int rep = 0; rep < 300; ++rep) {
        std::vector<double> p(1 + rng.index(8));
        for (auto& v : p) v = 1e-6 + rng.uniform() * (1 - 1e-6);
        const auto adj = holm_adjust(p);
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_GE(adj[i], p[i]);
            EXPECT_LE(adj[i], 1.0);
            if (i > 0) EXPECT_GE(adj[order[i]], adj[order[i - 1]]);
        }
    }
}

TEST(Responses, ValidationNamesFields) {
    ResponseRecord r{"r1", "q001", 2, {1, 2, 5, 4}, "t"};
    EXPECT_EQ(r.invalid_fields(), std::vector<std::string>{"ratings"});
    r.chosen_slot = 0;
    r.ratings = {1, 1, 1, 1};
    EXPECT_EQ(r.invalid_fields(), std::vector<std::string>{"chosen_slot"});

    std::vector<std::string> bad;
    response_from_json_text(R"({"rater_id":"r","quartet_id":"q","chosen_slot":"x","ratings":[1,2,3]})", &bad);
    EXPECT_NE(std::find(bad.begin(), bad.end(), "chosen_slot"), bad.end());
    EXPECT_NE(std::find(bad.begin(), bad.end(), "ratings"), bad.end());
}

TEST(Responses, FileRoundTrip) {
    oracle::TempDir dir;
    const auto qs = make_quartets(5, 10);
    const auto rs = simulate_raters(qs, 3, RaterModel::Uniform, 11);
    write_responses(rs, dir / "r.jsonl");
    EXPECT_EQ(read_responses(dir / "r.jsonl"), rs);
}

TEST(Analyze, PerfectRaters) {
    const auto qs = make_quartets(50, 12);
    const auto report = analyze_study(simulate_raters(qs, 8, RaterModel::Perfect, 13), qs);
    EXPECT_EQ(report.accuracy, 1.0);
    ASSERT_TRUE(report.kappa.has_value());
    EXPECT_EQ(*report.kappa, 1.0);
    EXPECT_EQ(report.responses, 400u);
    EXPECT_EQ(report.raters, 8u);
    ASSERT_EQ(report.tests.size(), 3u);
    // Every rater scores real 4 against 1, so all eight differences tie at 3.
    for (const auto& t : report.tests) EXPECT_LT(t.result.p_two_sided, 0.05);
}

TEST(Analyze, NullRatersNearChance) {
    const auto qs = make_quartets(50, 14);
    const auto report = analyze_study(simulate_raters(qs, 8, RaterModel::Uniform, 15), qs);
    EXPECT_NEAR(report.accuracy, 0.25, 0.08);
    ASSERT_TRUE(report.kappa.has_value());
    EXPECT_NEAR(*report.kappa, 0.0, 0.1);
    for (const auto& t : report.tests) EXPECT_GE(t.p_holm, t.result.p_two_sided);

    std::size_t total = 0;
    for (const auto& g : report.rating_counts)
        for (auto c : g) total += c;
    EXPECT_EQ(total, 1600u);
    const auto csv = ratings_csv(report);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
    EXPECT_EQ(csv.rfind("group,rating,count\n", 0), 0u);

    const auto j = nlohmann::json::parse(report_to_json(report));
    EXPECT_TRUE(j.contains("accuracy"));
    EXPECT_TRUE(j.contains("kappa"));
    EXPECT_EQ(j.at("tests").size(), 3u);
}

TEST(Analyze, RejectsDuplicateResponses) {
    const auto qs = make_quartets(3, 16);
    auto rs = simulate_raters(qs, 2, RaterModel::Uniform, 17);
    rs.push_back(rs.front());
    EXPECT_THROW(analyze_study(rs, qs), std::invalid_argument);
}

TEST(Simulation, MeanAccuracyAtChance) {
    const auto qs = make_quartets(50, 18);
    double acc = 0.0;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep)
        acc += identification_accuracy(simulate_raters(qs, 8, RaterModel::Uniform, 1000 + rep), qs);
    EXPECT_NEAR(acc / reps, 0.25, 0.01);
}
