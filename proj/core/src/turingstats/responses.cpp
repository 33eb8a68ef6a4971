#include "radsynth/turingstats/responses.hpp"

#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"

namespace radsynth::turing {

std::vector<std::string> ResponseRecord::invalid_fields() const {
    std::vector<std::string> bad;
    if (rater_id.empty()) bad.emplace_back("rater_id");
    if (quartet_id.empty()) bad.emplace_back("quartet_id");
    if (chosen_slot < 1 || chosen_slot > 4) bad.emplace_back("chosen_slot");
    for (int r : ratings) {
        if (r < 1 || r > 4) {
            bad.emplace_back("ratings");
            break;
        }
    }
    return bad;
}

std::string response_to_jsonl(const ResponseRecord& r) {
    jsonl::json j{{"rater_id", r.rater_id},
                  {"quartet_id", r.quartet_id},
                  {"chosen_slot", r.chosen_slot},
                  {"ratings", r.ratings},
                  {"timestamp", r.timestamp}};
    return j.dump() + "\n";
}

ResponseRecord response_from_json_text(const std::string& text, std::vector<std::string>* bad_fields) {
    std::vector<std::string> bad;
    ResponseRecord r;
    jsonl::json j = jsonl::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        bad = {"body"};
    } else {
        auto str = [&](const char* key, std::string& dst) {
            if (j.contains(key) && j[key].is_string()) dst = j[key].get<std::string>();
        };
        str("rater_id", r.rater_id);
        str("quartet_id", r.quartet_id);
        str("timestamp", r.timestamp);
        if (j.contains("chosen_slot") && j["chosen_slot"].is_number_integer()) r.chosen_slot = j["chosen_slot"].get<int>();
        bool ratings_ok = j.contains("ratings") && j["ratings"].is_array() && j["ratings"].size() == 4;
        if (ratings_ok) {
            for (std::size_t i = 0; i < 4; ++i) {
                if (!j["ratings"][i].is_number_integer()) {
                    ratings_ok = false;
                    break;
                }
                r.ratings[i] = j["ratings"][i].get<int>();
            }
        }
        bad = r.invalid_fields();
        if (!ratings_ok && (bad.empty() || bad.back() != "ratings")) bad.emplace_back("ratings");
    }
    if (bad_fields) {
        *bad_fields = bad;
    } else if (!bad.empty()) {
        std::string list;
        for (const auto& f : bad) list += (list.empty() ? "" : ",") + f;
        throw std::invalid_argument("invalid response record: " + list);
    }
    return r;
}

std::vector<ResponseRecord> read_responses(const std::filesystem::path& path) {
    std::vector<ResponseRecord> out;
    for (const auto& j : jsonl::read(path)) out.push_back(response_from_json_text(j.dump()));
    return out;
}

void write_responses(std::span<const ResponseRecord> responses, const std::filesystem::path& path) {
    std::string text;
    for (const auto& r : responses) text += response_to_jsonl(r);
    write_text_file(path, text);
}

}  // namespace radsynth::turing
