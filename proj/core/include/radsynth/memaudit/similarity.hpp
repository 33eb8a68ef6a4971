#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radsynth/evalmetrics/features_csv.hpp"

namespace radsynth::audit {

/// a.b / (|a| |b|), clamped to [-1, 1]. Throws on a dimension mismatch or
/// a zero vector.
double cosine_sim(std::span<const double> a, std::span<const double> b);

struct SimilarPair {
    std::size_t rank = 0;  // 1-based
    std::string real_id;
    std::string synth_id;
    double cosine = 0.0;
    bool operator==(const SimilarPair&) const = default;
};

/// The k highest-cosine (real, synthetic) pairs over the full cross product,
/// ordered by cosine descending, then real_id, then synth_id. k is capped at
/// |real| x |synth|. Search is exhaustive and split over synthetic rows when
/// threads > 1; the result does not depend on the thread count.
std::vector<SimilarPair> top_k_pairs(const eval::FeatureTable& real, const eval::FeatureTable& synth,
                                     std::size_t k, unsigned threads = 1);

/// JSON Lines {rank, real_id, synth_id, cosine}.
void write_pairs(std::span<const SimilarPair> pairs, const std::filesystem::path& path);
std::vector<SimilarPair> read_pairs(const std::filesystem::path& path);

}  // namespace radsynth::audit
