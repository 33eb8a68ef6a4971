#include "radsynth/pipeline/triage.hpp"

#include <map>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"

namespace radsynth::pipeline {

std::string image_verdict_to_jsonl(const ImageVerdict& v) {
    jsonl::json j{{"source_id", v.source_id},
                  {"decision", v.reject ? "reject" : "accept"},
                  {"reason", v.reason},
                  {"reviewer_id", v.reviewer_id}};
    return j.dump() + "\n";
}

ImageVerdict image_verdict_from_json_text(const std::string& text) {
    const auto j = jsonl::json::parse(text);
    ImageVerdict v;
    v.source_id = j.at("source_id").get<std::string>();
    const auto decision = j.at("decision").get<std::string>();
    if (decision == "reject") {
        v.reject = true;
    } else if (decision != "accept") {
        throw std::invalid_argument("image verdict: decision must be accept or reject, got '" + decision + "'");
    }
    v.reason = j.value("reason", std::string{});
    v.reviewer_id = j.value("reviewer_id", std::string{});
    return v;
}

std::vector<ImageVerdict> read_image_verdicts(const std::filesystem::path& path) {
    std::vector<ImageVerdict> out;
    for (const auto& j : jsonl::read(path)) out.push_back(image_verdict_from_json_text(j.dump()));
    return out;
}

void write_image_verdicts(std::span<const ImageVerdict> verdicts, const std::filesystem::path& path) {
    std::string text;
    for (const auto& v : verdicts) text += image_verdict_to_jsonl(v);
    write_text_file(path, text);
}

imaging::DatasetManifest triage_apply(const imaging::DatasetManifest& manifest,
                                      std::span<const ImageVerdict> verdicts, bool finalize) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) pos[manifest.entries[i].source_id] = i;
    for (const auto& v : verdicts) {
        if (!pos.count(v.source_id)) throw std::invalid_argument("triage: unknown source_id '" + v.source_id + "'");
        if (v.reject && v.reason.empty()) throw std::invalid_argument("triage: rejection of '" + v.source_id + "' has no reason");
    }
    imaging::DatasetManifest out = manifest;
    for (const auto& v : verdicts) {
        auto& e = out.entries[pos[v.source_id]];
        if (v.reject) {
            e.triage_status = imaging::TriageStatus::Rejected;
            e.reject_reason = v.reason;
        } else {
            e.triage_status = imaging::TriageStatus::Accepted;
            e.reject_reason.reset();
        }
    }
    if (finalize) {
        for (auto& e : out.entries) {
            if (e.triage_status == imaging::TriageStatus::Pending) e.triage_status = imaging::TriageStatus::Accepted;
        }
    }
    out.validate();
    return out;
}

}  // namespace radsynth::pipeline
