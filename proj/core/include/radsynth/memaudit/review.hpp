#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "radsynth/imaging/gray_image.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/memaudit/similarity.hpp"

namespace radsynth::audit {

struct BundleEntry {
    std::size_t rank = 0;
    std::string real_id;
    std::string synth_id;
    double cosine = 0.0;
    std::string file;  // composite PNG, relative to the bundle directory
};

/// Real image on the left, synthetic on the right, and a footer strip below
/// with "#rank" and the cosine to four decimals. Heights must match.
imaging::GrayImage compose_pair(const imaging::GrayImage& real, const imaging::GrayImage& synth, std::size_t rank,
                                double cosine);

/// Height of the footer strip added by compose_pair.
int footer_height();

/// Writes pair_NNNN.png per pair and index.jsonl into out_dir. Image ids are
/// looked up across the given manifests; a missing id or file is an error
/// and nothing is written.
std::vector<BundleEntry> build_review_bundle(std::span<const SimilarPair> pairs,
                                             const std::vector<std::filesystem::path>& manifests,
                                             const std::filesystem::path& out_dir);

std::vector<BundleEntry> read_bundle_index(const std::filesystem::path& path);

enum class Verdict { ExplicitMemorization, NotMemorized };
std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& text);

struct AuditVerdict {
    std::size_t pair_rank = 0;
    std::string reviewer_id;
    Verdict verdict = Verdict::NotMemorized;
    std::string note;
    bool operator==(const AuditVerdict&) const = default;
};

/// Dual independent review: at most one verdict per (pair, reviewer) and at
/// most two reviewers per pair.
class VerdictLog {
public:
    /// Throws std::invalid_argument on a duplicate, a third reviewer, an
    /// empty reviewer id or rank 0.
    void add(const AuditVerdict& v);
    bool has(std::size_t rank, const std::string& reviewer) const;
    std::vector<AuditVerdict> for_pair(std::size_t rank) const;
    /// True when the pair has both verdicts.
    bool complete(std::size_t rank) const { return for_pair(rank).size() == 2; }
    /// Pairs where at least one reviewer flagged memorization.
    std::vector<std::size_t> flagged() const;
    const std::vector<AuditVerdict>& all() const { return log_; }

private:
    std::vector<AuditVerdict> log_;
    std::map<std::size_t, std::vector<std::size_t>> by_rank_;
};

std::string verdict_to_jsonl(const AuditVerdict& v);
AuditVerdict verdict_from_json_text(const std::string& line);
VerdictLog read_verdicts(const std::filesystem::path& path);
void write_verdicts(const VerdictLog& log, const std::filesystem::path& path);

}  // namespace radsynth::audit
