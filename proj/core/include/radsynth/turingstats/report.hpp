#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radsynth/turingstats/stats.hpp"

namespace radsynth::turing {

struct GroupTest {
    Group group = Group::CkptA;  // compared against Group::Real
    TestResult result;
    double p_holm = 1.0;
};

struct StudyReport {
    std::size_t responses = 0;
    std::size_t raters = 0;
    std::size_t quartets = 0;
    double accuracy = 0.0;
    std::optional<double> kappa;
    std::string kappa_error;  // set when kappa is undefined
    std::vector<RaterGroupMeans> rater_means;
    std::array<double, 4> group_means{};  // mean of rater means, per group
    std::vector<GroupTest> tests;         // one per synthetic group
    std::array<std::array<std::size_t, 4>, 4> rating_counts{};  // [group][rating - 1]
};

/// Requires valid records and at most one response per (rater, quartet).
/// Wilcoxon tests pair each rater's real-group mean with that rater's mean
/// for one synthetic group; Holm runs over the three tests.
StudyReport analyze_study(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets);

std::string report_to_json(const StudyReport& report);
/// "group,rating,count", 16 rows.
std::string ratings_csv(const StudyReport& report);

enum class RaterModel {
    Uniform,  // slot and every rating drawn uniformly
    Perfect,  // always picks the real slot; rates it 4 and the rest 1
};

/// Every simulated rater answers every quartet. Rater r draws from
/// Rng::derive(seed, r).
std::vector<ResponseRecord> simulate_raters(std::span<const Quartet> quartets, int raters, RaterModel model,
                                            std::uint64_t seed);

}  // namespace radsynth::turing
