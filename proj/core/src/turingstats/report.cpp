#include "radsynth/turingstats/report.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/rng.hpp"

namespace radsynth::turing {

StudyReport analyze_study(std::span<const ResponseRecord> responses, std::span<const Quartet> quartets) {
    if (responses.empty()) throw std::invalid_argument("analyze_study: no responses");
    const auto idx = index_quartets(quartets);
    std::set<std::pair<std::string, std::string>> seen;
    std::set<std::string> raters;
    std::set<std::string> answered;
    StudyReport rep;
    for (const auto& r : responses) {
        const auto bad = r.invalid_fields();
        if (!bad.empty()) throw std::invalid_argument("analyze_study: invalid field '" + bad.front() + "'");
        if (!seen.emplace(r.rater_id, r.quartet_id).second) {
            throw std::invalid_argument("analyze_study: duplicate response by '" + r.rater_id + "' for " + r.quartet_id);
        }
        const auto it = idx.find(r.quartet_id);
        if (it == idx.end()) throw std::invalid_argument("analyze_study: unknown quartet '" + r.quartet_id + "'");
        for (std::size_t s = 0; s < 4; ++s) {
            const auto g = static_cast<std::size_t>(it->second->group_of_slot[s]);
            ++rep.rating_counts[g][static_cast<std::size_t>(r.ratings[s] - 1)];
        }
        raters.insert(r.rater_id);
        answered.insert(r.quartet_id);
    }
    rep.responses = responses.size();
    rep.raters = raters.size();
    rep.quartets = answered.size();
    rep.accuracy = identification_accuracy(responses, quartets);
    try {
        rep.kappa = fleiss_kappa(chosen_slot_table(responses, quartets));
    } catch (const std::exception& e) {
        rep.kappa_error = e.what();
    }
    rep.rater_means = rater_group_means(responses, quartets);
    for (const auto& m : rep.rater_means) {
        for (std::size_t g = 0; g < 4; ++g) rep.group_means[g] += m.means[g] / static_cast<double>(rep.rater_means.size());
    }

    std::vector<double> real;
    for (const auto& m : rep.rater_means) real.push_back(m.means[0]);
    std::vector<double> raw;
    for (Group g : {Group::CkptA, Group::CkptB, Group::CkptC}) {
        std::vector<double> other;
        for (const auto& m : rep.rater_means) other.push_back(m.means[static_cast<std::size_t>(g)]);
        GroupTest t;
        t.group = g;
        t.result = wilcoxon_signed_rank(real, other);
        raw.push_back(t.result.p_two_sided);
        rep.tests.push_back(t);
    }
    const auto adj = holm_adjust(raw);
    for (std::size_t i = 0; i < rep.tests.size(); ++i) rep.tests[i].p_holm = adj[i];
    return rep;
}

std::string report_to_json(const StudyReport& rep) {
    using jsonl::json;
    json j;
    j["responses"] = rep.responses;
    j["raters"] = rep.raters;
    j["quartets"] = rep.quartets;
    j["accuracy"] = rep.accuracy;
    j["kappa"] = rep.kappa ? json(*rep.kappa) : json(nullptr);
    if (!rep.kappa) j["kappa_error"] = rep.kappa_error;
    json group_means = json::object();
    for (Group g : kGroups) group_means[to_string(g)] = rep.group_means[static_cast<std::size_t>(g)];
    j["group_means"] = group_means;
    json raters = json::array();
    for (const auto& m : rep.rater_means) {
        json means = json::object();
        for (Group g : kGroups) means[to_string(g)] = m.means[static_cast<std::size_t>(g)];
        raters.push_back({{"rater_id", m.rater_id}, {"quartets", m.quartets}, {"means", means}});
    }
    j["rater_means"] = raters;
    json tests = json::array();
    for (const auto& t : rep.tests) {
        tests.push_back({{"comparison", "real_vs_" + to_string(t.group)},
                         {"statistic", t.result.statistic},
                         {"n_effective", t.result.n_effective},
                         {"method", to_string(t.result.method)},
                         {"zero_only", t.result.zero_only},
                         {"p_two_sided", t.result.p_two_sided},
                         {"p_holm", t.p_holm}});
    }
    j["tests"] = tests;
    return j.dump(2) + "\n";
}

std::string ratings_csv(const StudyReport& rep) {
    std::string out = "group,rating,count\n";
    for (Group g : kGroups) {
        for (int r = 1; r <= 4; ++r) {
            out += to_string(g) + "," + std::to_string(r) + "," +
                   std::to_string(rep.rating_counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(r - 1)]) + "\n";
        }
    }
    return out;
}

std::vector<ResponseRecord> simulate_raters(std::span<const Quartet> quartets, int raters, RaterModel model,
                                            std::uint64_t seed) {
    if (raters < 1) throw std::invalid_argument("simulate_raters: raters must be >= 1");
    std::vector<ResponseRecord> out;
    out.reserve(quartets.size() * static_cast<std::size_t>(raters));
    for (int r = 0; r < raters; ++r) {
        Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(r));
        char id[32];
        std::snprintf(id, sizeof id, "rater_%02d", r + 1);
        for (const auto& q : quartets) {
            ResponseRecord rec;
            rec.rater_id = id;
            rec.quartet_id = q.quartet_id;
            rec.timestamp = "1970-01-01T00:00:00Z";
            if (model == RaterModel::Uniform) {
                rec.chosen_slot = 1 + static_cast<int>(rng.index(4));
                for (int& v : rec.ratings) v = 1 + static_cast<int>(rng.index(4));
            } else {
                rec.chosen_slot = q.hidden_truth;
                for (std::size_t s = 0; s < 4; ++s) rec.ratings[s] = q.group_of_slot[s] == Group::Real ? 4 : 1;
            }
            out.push_back(std::move(rec));
        }
    }
    return out;
}

}  // namespace radsynth::turing
