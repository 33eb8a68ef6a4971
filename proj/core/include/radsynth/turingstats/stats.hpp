#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radsynth/turingstats/quartet.hpp"
#include "radsynth/turingstats/responses.hpp"

namespace radsynth::turing {

/// Fraction of responses whose chosen slot is the real one. Throws on an
/// empty response set or an unknown quartet id.
double identification_accuracy(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets);

/// counts[i][j]: raters assigning item i to category j.
struct AgreementTable {
    std::vector<std::vector<int>> counts;

    std::size_t items() const { return counts.size(); }
    std::size_t categories() const { return counts.empty() ? 0 : counts.front().size(); }
    /// Raters per item; throws unless every row has the same sum.
    int raters() const;
};

/// Items are quartets (ordered by id), categories are the four slots.
/// Every quartet with responses must have the same number of them.
AgreementTable chosen_slot_table(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets);

/// Throws std::invalid_argument for fewer than 2 raters, no items, unequal
/// row sums, and std::domain_error when expected agreement is 1.
double fleiss_kappa(const AgreementTable& table);

struct RaterGroupMeans {
    std::string rater_id;
    std::array<double, 4> means{};  // indexed by Group
    std::size_t quartets = 0;
};

/// Per rater (sorted by id), the mean rating given to each group.
std::vector<RaterGroupMeans> rater_group_means(std::span<const ResponseRecord> responses,
                                               std::span<const Quartet> quartets);

enum class WilcoxonMethod { Exact, NormalApprox };
std::string to_string(WilcoxonMethod m);

struct TestResult {
    double statistic = 0.0;  // sum of ranks of positive differences
    std::size_t n_effective = 0;
    double p_two_sided = 1.0;
    WilcoxonMethod method = WilcoxonMethod::Exact;
    bool zero_only = false;
};

/// Largest n_eff handled by exact enumeration (tie-free only).
inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Paired two-sided signed-rank test on x - y. Zero differences are dropped;
/// tied |d| get mid-ranks and force the normal approximation. Ties are
/// exact floating-point equality.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

/// Number of sign assignments of ranks 1..n whose positive-rank sum is s,
/// for s = 0..n(n+1)/2. Sums to 2^n. n <= 62.
std::vector<std::uint64_t> signed_rank_null_counts(std::size_t n);

/// Holm step-down adjustment, returned in input order. Every p must lie in
/// (0, 1].
std::vector<double> holm_adjust(std::span<const double> pvals);

}  // namespace radsynth::turing
