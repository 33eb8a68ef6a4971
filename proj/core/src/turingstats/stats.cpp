#include "radsynth/turingstats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace radsynth::turing {
namespace {

const Quartet& lookup(const QuartetIndex& idx, const std::string& id) {
    const auto it = idx.find(id);
    if (it == idx.end()) throw std::invalid_argument("response references unknown quartet '" + id + "'");
    return *it->second;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double identification_accuracy(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets) {
    if (responses.empty()) throw std::invalid_argument("identification_accuracy: no responses");
    const auto idx = index_quartets(quartets);
    std::size_t correct = 0;
    for (const auto& r : responses) {
        if (r.chosen_slot == lookup(idx, r.quartet_id).hidden_truth) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(responses.size());
}

int AgreementTable::raters() const {
    if (counts.empty()) throw std::invalid_argument("agreement table: no items");
    int n = -1;
    for (const auto& row : counts) {
        if (row.size() != categories()) throw std::invalid_argument("agreement table: ragged rows");
        for (int c : row) {
            if (c < 0) throw std::invalid_argument("agreement table: negative count");
        }
        const int s = std::accumulate(row.begin(), row.end(), 0);
        if (n >= 0 && s != n) throw std::invalid_argument("agreement table: items have different rater counts");
        n = s;
    }
    return n;
}

AgreementTable chosen_slot_table(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets) {
    const auto idx = index_quartets(quartets);
    std::map<std::string, std::vector<int>> rows;
    for (const auto& r : responses) {
        lookup(idx, r.quartet_id);
        if (r.chosen_slot < 1 || r.chosen_slot > 4) throw std::invalid_argument("chosen_slot out of range");
        auto& row = rows[r.quartet_id];
        row.resize(4, 0);
        ++row[static_cast<std::size_t>(r.chosen_slot - 1)];
    }
    AgreementTable t;
    for (auto& [id, row] : rows) t.counts.push_back(std::move(row));
    t.raters();
    return t;
}

double fleiss_kappa(const AgreementTable& table) {
    const int n = table.raters();
    if (n < 2) throw std::invalid_argument("fleiss_kappa: need at least two raters per item");
    const auto big_n = static_cast<double>(table.items());
    const std::size_t c = table.categories();
    const double nd = n;
    double p_bar = 0.0;
    std::vector<double> col(c, 0.0);
    for (const auto& row : table.counts) {
        double sq = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            sq += static_cast<double>(row[j]) * row[j];
            col[j] += row[j];
        }
        p_bar += (sq - nd) / (nd * (nd - 1.0));
    }
    p_bar /= big_n;
    double pe = 0.0;
    for (double v : col) {
        const double pj = v / (big_n * nd);
        pe += pj * pj;
    }
    if (pe >= 1.0) throw std::domain_error("fleiss_kappa: undefined when every rating falls in one category");
    return (p_bar - pe) / (1.0 - pe);
}

std::vector<RaterGroupMeans> rater_group_means(std::span<const ResponseRecord> responses,
                                               std::span<const Quartet> quartets) {
    const auto idx = index_quartets(quartets);
    std::map<std::string, RaterGroupMeans> acc;
    for (const auto& r : responses) {
        const Quartet& q = lookup(idx, r.quartet_id);
        auto& m = acc[r.rater_id];
        m.rater_id = r.rater_id;
        for (std::size_t s = 0; s < 4; ++s) {
            if (r.ratings[s] < 1 || r.ratings[s] > 4) throw std::invalid_argument("rating out of 1..4");
            m.means[static_cast<std::size_t>(q.group_of_slot[s])] += r.ratings[s];
        }
        ++m.quartets;
    }
    std::vector<RaterGroupMeans> out;
    for (auto& [id, m] : acc) {
        for (double& v : m.means) v /= static_cast<double>(m.quartets);
        out.push_back(m);
    }
    return out;
}

std::string to_string(WilcoxonMethod m) { return m == WilcoxonMethod::Exact ? "exact" : "normal_approx"; }

std::vector<std::uint64_t> signed_rank_null_counts(std::size_t n) {
    if (n > 62) throw std::invalid_argument("signed_rank_null_counts: n too large");
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<std::uint64_t> counts(max_sum + 1, 0);
    counts[0] = 1;
    // Adding rank r: each existing assignment either leaves it negative or
    // adds r to the positive sum.
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t s = r * (r + 1) / 2; s >= r; --s) counts[s] += counts[s - r];
    }
    return counts;
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("wilcoxon_signed_rank: length mismatch");
    if (x.empty()) throw std::invalid_argument("wilcoxon_signed_rank: empty input");
    std::vector<double> d;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x[i] - y[i];
        if (!std::isfinite(v)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite difference");
        if (v != 0.0) d.push_back(v);
    }
    TestResult res;
    res.n_effective = d.size();
    if (d.empty()) {
        res.zero_only = true;
        res.p_two_sided = 1.0;
        return res;
    }
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n);
    bool ties = false;
    double tie_term = 0.0;  // sum of t^3 - t over tie groups
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
        const auto t = static_cast<double>(j - i);
        if (j - i > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] > 0) w += rank[i];
    }
    res.statistic = w;

    if (!ties && n <= kWilcoxonExactMax) {
        res.method = WilcoxonMethod::Exact;
        const auto counts = signed_rank_null_counts(n);
        const auto wi = static_cast<std::size_t>(w);  // integral without ties
        std::uint64_t le = 0;
        std::uint64_t ge = 0;
        for (std::size_t s = 0; s < counts.size(); ++s) {
            if (s <= wi) le += counts[s];
            if (s >= wi) ge += counts[s];
        }
        const double total = std::ldexp(1.0, static_cast<int>(n));
        res.p_two_sided = std::min(1.0, 2.0 * static_cast<double>(std::min(le, ge)) / total);
        return res;
    }

    res.method = WilcoxonMethod::NormalApprox;
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        res.p_two_sided = 1.0;
        return res;
    }
    const double sd = std::sqrt(var);
    const double p_le = normal_cdf((w - mean + 0.5) / sd);
    const double p_ge = normal_cdf((mean - w + 0.5) / sd);
    res.p_two_sided = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    return res;
}

std::vector<double> holm_adjust(std::span<const double> pvals) {
    const std::size_t m = pvals.size();
    for (double p : pvals) {
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("holm_adjust: p-values must lie in (0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::vector<double> out(m);
    double running = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double adj = std::min(1.0, static_cast<double>(m - i) * pvals[order[i]]);
        running = std::max(running, adj);
        out[order[i]] = running;
    }
    return out;
}

}  // namespace radsynth::turing
