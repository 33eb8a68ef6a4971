#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace radsynth::turing {

enum class Group { Real = 0, CkptA = 1, CkptB = 2, CkptC = 3 };
inline constexpr std::array<Group, 4> kGroups{Group::Real, Group::CkptA, Group::CkptB, Group::CkptC};
std::string to_string(Group g);
Group parse_group(const std::string& text);

/// One real and three synthetic images in display order. Slots are 1-based
/// in every external representation; arrays here are 0-based.
struct Quartet {
    std::string quartet_id;
    std::array<std::string, 4> slots;
    int hidden_truth = 1;  // slot holding the real image, 1..4
    std::array<Group, 4> group_of_slot{};

    /// Exactly one Real slot, matching hidden_truth, and three distinct
    /// synthetic groups. Throws std::invalid_argument otherwise.
    void validate() const;
    int slot_of(Group g) const;
    bool operator==(const Quartet&) const = default;
};

/// Samples n images without replacement from each pool and shuffles the
/// slots of every quartet independently. Pools must each hold at least n
/// ids and be pairwise disjoint.
std::vector<Quartet> build_quartets(std::span<const std::string> real_pool,
                                    const std::array<std::vector<std::string>, 3>& synth_pools, int n_quartets,
                                    std::uint64_t seed);

/// Rater file: {quartet_id, images[4]}. Key file: {quartet_id, hidden_truth,
/// groups[4]}. The rater file never carries group or truth fields.
void write_quartets(std::span<const Quartet> quartets, const std::filesystem::path& rater_file,
                    const std::filesystem::path& key_file);
std::vector<Quartet> read_quartets(const std::filesystem::path& rater_file, const std::filesystem::path& key_file);

/// Rater-facing view only: quartet ids and slot images.
struct BlindQuartet {
    std::string quartet_id;
    std::array<std::string, 4> images;
};
std::vector<BlindQuartet> read_blind_quartets(const std::filesystem::path& rater_file);

using QuartetIndex = std::map<std::string, const Quartet*>;
QuartetIndex index_quartets(std::span<const Quartet> quartets);

}  // namespace radsynth::turing
