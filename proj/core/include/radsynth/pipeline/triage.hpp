#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radsynth/imaging/manifest.hpp"

namespace radsynth::pipeline {

/// Accept/reject decision for one image. Rejections need a reason.
struct ImageVerdict {
    std::string source_id;
    bool reject = false;
    std::string reason;
    std::string reviewer_id;
    bool operator==(const ImageVerdict&) const = default;
};

/// JSON Lines {source_id, decision: accept|reject, reason, reviewer_id}.
std::string image_verdict_to_jsonl(const ImageVerdict& v);
ImageVerdict image_verdict_from_json_text(const std::string& text);
std::vector<ImageVerdict> read_image_verdicts(const std::filesystem::path& path);
void write_image_verdicts(std::span<const ImageVerdict> verdicts, const std::filesystem::path& path);

/// Returns the updated manifest; the input is never modified, so an error
/// (unknown id, rejection without reason) leaves nothing half-applied. A
/// later verdict for the same id wins. With finalize, entries still pending
/// afterwards become accepted.
imaging::DatasetManifest triage_apply(const imaging::DatasetManifest& manifest,
                                      std::span<const ImageVerdict> verdicts, bool finalize = false);

}  // namespace radsynth::pipeline
