#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace radsynth::turing {

/// One rater's judgment of one quartet. Slots and ratings are 1-based.
struct ResponseRecord {
    std::string rater_id;
    std::string quartet_id;
    int chosen_slot = 0;
    std::array<int, 4> ratings{};
    std::string timestamp;

    /// Names of invalid fields ("rater_id", "quartet_id", "chosen_slot",
    /// "ratings"); empty when the record is valid.
    std::vector<std::string> invalid_fields() const;
    bool operator==(const ResponseRecord&) const = default;
};

std::string response_to_jsonl(const ResponseRecord& r);

/// Parses one JSON object. Missing or mistyped fields are reported through
/// `bad_fields` rather than thrown, so callers can return a field list.
ResponseRecord response_from_json_text(const std::string& text, std::vector<std::string>* bad_fields = nullptr);

/// Throws on malformed lines or invalid records.
std::vector<ResponseRecord> read_responses(const std::filesystem::path& path);
void write_responses(std::span<const ResponseRecord> responses, const std::filesystem::path& path);

}  // namespace radsynth::turing
