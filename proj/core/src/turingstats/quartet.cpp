#include "radsynth/turingstats/quartet.hpp"

#include <numeric>
#include <set>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/rng.hpp"

namespace radsynth::turing {

std::string to_string(Group g) {
    switch (g) {
        case Group::Real:
            return "real";
        case Group::CkptA:
            return "ckptA";
        case Group::CkptB:
            return "ckptB";
        case Group::CkptC:
            break;
    }
    return "ckptC";
}

Group parse_group(const std::string& text) {
    for (Group g : kGroups) {
        if (to_string(g) == text) return g;
    }
    throw std::invalid_argument("unknown group '" + text + "'");
}

void Quartet::validate() const {
    if (quartet_id.empty()) throw std::invalid_argument("quartet: empty id");
    if (hidden_truth < 1 || hidden_truth > 4) throw std::invalid_argument("quartet " + quartet_id + ": hidden_truth out of 1..4");
    std::set<Group> seen(group_of_slot.begin(), group_of_slot.end());
    if (seen.size() != 4) throw std::invalid_argument("quartet " + quartet_id + ": groups must be distinct");
    if (group_of_slot[static_cast<std::size_t>(hidden_truth - 1)] != Group::Real) {
        throw std::invalid_argument("quartet " + quartet_id + ": hidden_truth does not point at the real slot");
    }
    std::set<std::string> ids(slots.begin(), slots.end());
    if (ids.size() != 4 || ids.count("")) throw std::invalid_argument("quartet " + quartet_id + ": slot images must be distinct ids");
}

int Quartet::slot_of(Group g) const {
    for (int s = 0; s < 4; ++s) {
        if (group_of_slot[static_cast<std::size_t>(s)] == g) return s + 1;
    }
    throw std::logic_error("quartet " + quartet_id + ": group missing");
}

std::vector<Quartet> build_quartets(std::span<const std::string> real_pool,
                                    const std::array<std::vector<std::string>, 3>& synth_pools, int n_quartets,
                                    std::uint64_t seed) {
    if (n_quartets < 1) throw std::invalid_argument("build_quartets: n_quartets must be >= 1");
    const auto n = static_cast<std::size_t>(n_quartets);
    std::array<std::vector<std::string>, 4> pools;
    pools[0].assign(real_pool.begin(), real_pool.end());
    for (std::size_t g = 0; g < 3; ++g) pools[g + 1] = synth_pools[g];

    std::set<std::string> all;
    for (std::size_t g = 0; g < 4; ++g) {
        if (pools[g].size() < n) {
            throw std::invalid_argument("build_quartets: pool '" + to_string(kGroups[g]) + "' has fewer than " +
                                        std::to_string(n) + " images");
        }
        for (const auto& id : pools[g]) {
            if (!all.insert(id).second) throw std::invalid_argument("build_quartets: id '" + id + "' appears twice");
        }
    }

    // Partial Fisher-Yates per pool: the first n positions are the draw.
    for (std::size_t g = 0; g < 4; ++g) {
        Rng rng = Rng::derive(seed, g);
        auto& pool = pools[g];
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = i + rng.index(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
    }

    Rng perm_rng = Rng::derive(seed, 4);
    std::vector<Quartet> out;
    out.reserve(n);
    for (std::size_t q = 0; q < n; ++q) {
        std::array<std::size_t, 4> order{0, 1, 2, 3};
        for (std::size_t i = 3; i > 0; --i) std::swap(order[i], order[perm_rng.index(i + 1)]);
        Quartet quartet;
        char id[32];
        std::snprintf(id, sizeof id, "q%03zu", q + 1);
        quartet.quartet_id = id;
        for (std::size_t s = 0; s < 4; ++s) {
            quartet.slots[s] = pools[order[s]][q];
            quartet.group_of_slot[s] = kGroups[order[s]];
            if (order[s] == 0) quartet.hidden_truth = static_cast<int>(s) + 1;
        }
        out.push_back(std::move(quartet));
    }
    return out;
}

void write_quartets(std::span<const Quartet> quartets, const std::filesystem::path& rater_file,
                    const std::filesystem::path& key_file) {
    std::vector<jsonl::json> rater_rows;
    std::vector<jsonl::json> key_rows;
    for (const auto& q : quartets) {
        q.validate();
        rater_rows.push_back({{"quartet_id", q.quartet_id}, {"images", q.slots}});
        jsonl::json groups = jsonl::json::array();
        for (Group g : q.group_of_slot) groups.push_back(to_string(g));
        key_rows.push_back({{"quartet_id", q.quartet_id}, {"hidden_truth", q.hidden_truth}, {"groups", groups}});
    }
    jsonl::write(rater_file, rater_rows);
    jsonl::write(key_file, key_rows);
}

std::vector<BlindQuartet> read_blind_quartets(const std::filesystem::path& rater_file) {
    std::vector<BlindQuartet> out;
    std::set<std::string> ids;
    for (const auto& j : jsonl::read(rater_file)) {
        BlindQuartet b;
        b.quartet_id = j.at("quartet_id").get<std::string>();
        const auto images = j.at("images").get<std::vector<std::string>>();
        if (images.size() != 4) throw std::runtime_error("quartet " + b.quartet_id + ": expected 4 images");
        std::copy(images.begin(), images.end(), b.images.begin());
        if (!ids.insert(b.quartet_id).second) throw std::runtime_error("duplicate quartet id " + b.quartet_id);
        out.push_back(std::move(b));
    }
    return out;
}

std::vector<Quartet> read_quartets(const std::filesystem::path& rater_file, const std::filesystem::path& key_file) {
    std::map<std::string, jsonl::json> keys;
    for (auto& j : jsonl::read(key_file)) keys[j.at("quartet_id").get<std::string>()] = j;
    std::vector<Quartet> out;
    for (const auto& b : read_blind_quartets(rater_file)) {
        const auto it = keys.find(b.quartet_id);
        if (it == keys.end()) throw std::runtime_error("key file lacks quartet " + b.quartet_id);
        Quartet q;
        q.quartet_id = b.quartet_id;
        q.slots = b.images;
        q.hidden_truth = it->second.at("hidden_truth").get<int>();
        const auto groups = it->second.at("groups").get<std::vector<std::string>>();
        if (groups.size() != 4) throw std::runtime_error("key for " + b.quartet_id + ": expected 4 groups");
        for (std::size_t s = 0; s < 4; ++s) q.group_of_slot[s] = parse_group(groups[s]);
        q.validate();
        out.push_back(std::move(q));
    }
    if (keys.size() != out.size()) throw std::runtime_error("key file has quartets absent from the rater file");
    return out;
}

QuartetIndex index_quartets(std::span<const Quartet> quartets) {
    QuartetIndex idx;
    for (const auto& q : quartets) {
        if (!idx.emplace(q.quartet_id, &q).second) throw std::invalid_argument("duplicate quartet id " + q.quartet_id);
    }
    return idx;
}

}  // namespace radsynth::turing
