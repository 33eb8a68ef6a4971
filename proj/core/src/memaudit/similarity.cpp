#include "radsynth/memaudit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "../common/jsonl.hpp"

namespace radsynth::audit {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Takes squared norms. sqrt(x * x) == x exactly in IEEE arithmetic, so a
// vector compared with itself scores exactly 1; the split form only guards
// against overflow and underflow of the product.
double cosine_from(double d, double aa, double bb) {
    const double p = aa * bb;
    const double denom = std::isfinite(p) && p >= std::numeric_limits<double>::min() ? std::sqrt(p)
                                                                                   : std::sqrt(aa) * std::sqrt(bb);
    return std::clamp(d / denom, -1.0, 1.0);
}

struct Candidate {
    double cosine;
    std::size_t real_row;
    std::size_t synth_row;
};

// Rows of an Eigen column-major matrix are strided; copy to contiguous rows.
std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
    return rows;
}

}  // namespace

double cosine_sim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_sim: dimension mismatch");
    if (a.empty()) throw std::invalid_argument("cosine_sim: empty vectors");
    const double na = dot(a.data(), a.data(), a.size());
    const double nb = dot(b.data(), b.data(), b.size());
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_sim: zero vector");
    return cosine_from(dot(a.data(), b.data(), a.size()), na, nb);
}

std::vector<SimilarPair> top_k_pairs(const eval::FeatureTable& real, const eval::FeatureTable& synth,
                                     std::size_t k, unsigned threads) {
    if (k < 1) throw std::invalid_argument("top_k_pairs: k must be >= 1");
    const auto nr = static_cast<std::size_t>(real.features.rows());
    const auto ns = static_cast<std::size_t>(synth.features.rows());
    if (nr == 0 || ns == 0) throw std::invalid_argument("top_k_pairs: empty feature set");
    if (real.ids.size() != nr || synth.ids.size() != ns) throw std::invalid_argument("top_k_pairs: id/row count mismatch");
    if (real.features.cols() != synth.features.cols()) throw std::invalid_argument("top_k_pairs: dimension mismatch");
    const auto dim = static_cast<std::size_t>(real.features.cols());
    if (dim == 0) throw std::invalid_argument("top_k_pairs: zero-dimensional features");
    k = std::min(k, nr * ns);

    const auto rrows = rows_of(real.features);
    const auto srows = rows_of(synth.features);
    auto sq_norms = [dim](const std::vector<std::vector<double>>& rows, const std::vector<std::string>& ids) {
        std::vector<double> out(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out[i] = dot(rows[i].data(), rows[i].data(), dim);
            if (out[i] == 0.0) throw std::invalid_argument("top_k_pairs: zero feature vector for '" + ids[i] + "'");
        }
        return out;
    };
    const auto rsq = sq_norms(rrows, real.ids);
    const auto ssq = sq_norms(srows, synth.ids);

    // Strict total order: a "better" candidate sorts first.
    auto better = [&](const Candidate& a, const Candidate& b) {
        if (a.cosine != b.cosine) return a.cosine > b.cosine;
        const auto& ra = real.ids[a.real_row];
        const auto& rb = real.ids[b.real_row];
        if (ra != rb) return ra < rb;
        const auto& sa = synth.ids[a.synth_row];
        const auto& sb = synth.ids[b.synth_row];
        if (sa != sb) return sa < sb;
        if (a.real_row != b.real_row) return a.real_row < b.real_row;
        return a.synth_row < b.synth_row;
    };

    auto scan = [&](std::size_t s_begin, std::size_t s_end) {
        // Max-heap on "worst first" keeps the current k best.
        std::vector<Candidate> heap;
        heap.reserve(k + 1);
        for (std::size_t s = s_begin; s < s_end; ++s) {
            for (std::size_t r = 0; r < nr; ++r) {
                Candidate c{cosine_from(dot(rrows[r].data(), srows[s].data(), dim), rsq[r], ssq[s]), r, s};
                if (heap.size() < k) {
                    heap.push_back(c);
                    std::push_heap(heap.begin(), heap.end(), better);
                } else if (better(c, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), better);
                    heap.back() = c;
                    std::push_heap(heap.begin(), heap.end(), better);
                }
            }
        }
        return heap;
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, ns);
    std::vector<std::vector<Candidate>> partial(workers);
    if (workers == 1) {
        partial[0] = scan(0, ns);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t b = ns * w / workers;
            const std::size_t e = ns * (w + 1) / workers;
            pool.emplace_back([&, w, b, e] { partial[w] = scan(b, e); });
        }
        for (auto& t : pool) t.join();
    }
    std::vector<Candidate> merged;
    for (auto& p : partial) merged.insert(merged.end(), p.begin(), p.end());
    std::sort(merged.begin(), merged.end(), better);
    merged.resize(k);

    std::vector<SimilarPair> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({i + 1, real.ids[merged[i].real_row], synth.ids[merged[i].synth_row], merged[i].cosine});
    }
    return out;
}

void write_pairs(std::span<const SimilarPair> pairs, const std::filesystem::path& path) {
    std::vector<jsonl::json> rows;
    for (const auto& p : pairs) {
        rows.push_back({{"rank", p.rank}, {"real_id", p.real_id}, {"synth_id", p.synth_id}, {"cosine", p.cosine}});
    }
    jsonl::write(path, rows);
}

std::vector<SimilarPair> read_pairs(const std::filesystem::path& path) {
    std::vector<SimilarPair> out;
    for (const auto& j : jsonl::read(path)) {
        out.push_back({j.at("rank").get<std::size_t>(), j.at("real_id").get<std::string>(),
                       j.at("synth_id").get<std::string>(), j.at("cosine").get<double>()});
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].rank != i + 1) throw std::runtime_error(path.string() + ": ranks must be consecutive from 1");
    }
    return out;
}

}  // namespace radsynth::audit
