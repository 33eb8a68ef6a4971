#include "radsynth/memaudit/review.hpp"

#include <array>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/imaging/image_io.hpp"

namespace radsynth::audit {
namespace {

using imaging::GrayImage;

// 3x5 glyphs, one 3-bit row mask per line, msb = leftmost column.
struct Glyph {
    char ch;
    std::array<unsigned char, 5> rows;
};

constexpr std::array<Glyph, 13> kFont{{
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'#', {5, 7, 5, 7, 5}},
}};

constexpr int kGlyphAdvance = 4;
constexpr int kLineHeight = 6;
constexpr int kPad = 1;

void draw_text(GrayImage& img, int x0, int y0, const std::string& text) {
    int x = x0;
    for (char ch : text) {
        for (const auto& g : kFont) {
            if (g.ch != ch) continue;
            for (int r = 0; r < 5; ++r) {
                for (int c = 0; c < 3; ++c) {
                    if (!(g.rows[r] & (4 >> c))) continue;
                    const int px = x + c;
                    const int py = y0 + r;
                    if (px >= 0 && px < img.width() && py >= 0 && py < img.height()) img.at(px, py) = 255;
                }
            }
        }
        x += kGlyphAdvance;
    }
}

std::string bundle_file_name(std::size_t rank) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "pair_%04zu.png", rank);
    return buf;
}

}  // namespace

int footer_height() { return 2 * kLineHeight + kPad; }

GrayImage compose_pair(const GrayImage& real, const GrayImage& synth, std::size_t rank, double cosine) {
    if (real.height() != synth.height()) throw std::invalid_argument("compose_pair: image heights differ");
    const int w = real.width() + synth.width();
    const int h = real.height();
    GrayImage out(w, h + footer_height(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < real.width(); ++x) out.at(x, y) = real.at(x, y);
        for (int x = 0; x < synth.width(); ++x) out.at(real.width() + x, y) = synth.at(x, y);
    }
    char cos_text[32];
    std::snprintf(cos_text, sizeof cos_text, "%.4f", cosine);
    draw_text(out, kPad, h + kPad, "#" + std::to_string(rank));
    draw_text(out, kPad, h + kPad + kLineHeight, cos_text);
    out.meta.source_id = "pair_" + std::to_string(rank);
    out.meta.origin = imaging::Origin::Synthetic;
    return out;
}

std::vector<BundleEntry> build_review_bundle(std::span<const SimilarPair> pairs,
                                             const std::vector<std::filesystem::path>& manifests,
                                             const std::filesystem::path& out_dir) {
    struct Located {
        std::filesystem::path manifest;
        imaging::ManifestEntry entry;
    };
    std::map<std::string, Located> index;
    for (const auto& mpath : manifests) {
        for (const auto& e : imaging::read_manifest(mpath).entries) index[e.source_id] = {mpath, e};
    }
    auto load = [&](const std::string& id) {
        const auto it = index.find(id);
        if (it == index.end()) throw std::runtime_error("review bundle: unknown image id '" + id + "'");
        const auto file = imaging::resolve_entry_path(it->second.manifest, it->second.entry);
        if (!std::filesystem::exists(file)) throw std::runtime_error("review bundle: missing image file " + file.string());
        return imaging::load_entry_image(it->second.manifest, it->second.entry);
    };

    // Compose everything first so a missing file leaves out_dir untouched.
    std::vector<GrayImage> composites;
    std::vector<BundleEntry> entries;
    for (const auto& p : pairs) {
        composites.push_back(compose_pair(load(p.real_id), load(p.synth_id), p.rank, p.cosine));
        entries.push_back({p.rank, p.real_id, p.synth_id, p.cosine, bundle_file_name(p.rank)});
    }
    std::filesystem::create_directories(out_dir);
    std::vector<jsonl::json> rows;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        imaging::write_png(composites[i], out_dir / entries[i].file);
        const auto& e = entries[i];
        rows.push_back({{"rank", e.rank}, {"real_id", e.real_id}, {"synth_id", e.synth_id}, {"cosine", e.cosine},
                        {"file", e.file}});
    }
    jsonl::write(out_dir / "index.jsonl", rows);
    return entries;
}

std::vector<BundleEntry> read_bundle_index(const std::filesystem::path& path) {
    std::vector<BundleEntry> out;
    for (const auto& j : jsonl::read(path)) {
        out.push_back({j.at("rank").get<std::size_t>(), j.at("real_id").get<std::string>(),
                       j.at("synth_id").get<std::string>(), j.at("cosine").get<double>(), j.at("file").get<std::string>()});
    }
    return out;
}

std::string to_string(Verdict v) {
    return v == Verdict::ExplicitMemorization ? "explicit_memorization" : "not_memorized";
}

Verdict parse_verdict(const std::string& text) {
    if (text == "explicit_memorization") return Verdict::ExplicitMemorization;
    if (text == "not_memorized") return Verdict::NotMemorized;
    throw std::invalid_argument("unknown verdict '" + text + "'");
}

void VerdictLog::add(const AuditVerdict& v) {
    if (v.pair_rank == 0) throw std::invalid_argument("verdict: pair rank must be >= 1");
    if (v.reviewer_id.empty()) throw std::invalid_argument("verdict: empty reviewer_id");
    auto& slots = by_rank_[v.pair_rank];
    for (std::size_t i : slots) {
        if (log_[i].reviewer_id == v.reviewer_id) {
            throw std::invalid_argument("verdict: duplicate for pair " + std::to_string(v.pair_rank) + " by '" +
                                        v.reviewer_id + "'");
        }
    }
    if (slots.size() >= 2) {
        throw std::invalid_argument("verdict: pair " + std::to_string(v.pair_rank) + " already has two reviewers");
    }
    slots.push_back(log_.size());
    log_.push_back(v);
}

bool VerdictLog::has(std::size_t rank, const std::string& reviewer) const {
    const auto it = by_rank_.find(rank);
    if (it == by_rank_.end()) return false;
    for (std::size_t i : it->second) {
        if (log_[i].reviewer_id == reviewer) return true;
    }
    return false;
}

std::vector<AuditVerdict> VerdictLog::for_pair(std::size_t rank) const {
    std::vector<AuditVerdict> out;
    const auto it = by_rank_.find(rank);
    if (it != by_rank_.end()) {
        for (std::size_t i : it->second) out.push_back(log_[i]);
    }
    return out;
}

std::vector<std::size_t> VerdictLog::flagged() const {
    std::set<std::size_t> ranks;
    for (const auto& v : log_) {
        if (v.verdict == Verdict::ExplicitMemorization) ranks.insert(v.pair_rank);
    }
    return {ranks.begin(), ranks.end()};
}

std::string verdict_to_jsonl(const AuditVerdict& v) {
    jsonl::json j{{"pair_rank", v.pair_rank}, {"reviewer_id", v.reviewer_id}, {"verdict", to_string(v.verdict)},
                  {"note", v.note}};
    return j.dump() + "\n";
}

AuditVerdict verdict_from_json_text(const std::string& line) {
    const auto j = jsonl::json::parse(line);
    AuditVerdict v;
    v.pair_rank = j.at("pair_rank").get<std::size_t>();
    v.reviewer_id = j.at("reviewer_id").get<std::string>();
    v.verdict = parse_verdict(j.at("verdict").get<std::string>());
    v.note = j.value("note", std::string{});
    return v;
}

VerdictLog read_verdicts(const std::filesystem::path& path) {
    VerdictLog log;
    for (const auto& j : jsonl::read(path)) log.add(verdict_from_json_text(j.dump()));
    return log;
}

void write_verdicts(const VerdictLog& log, const std::filesystem::path& path) {
    std::string text;
    for (const auto& v : log.all()) text += verdict_to_jsonl(v);
    write_text_file(path, text);
}

}  // namespace radsynth::audit
