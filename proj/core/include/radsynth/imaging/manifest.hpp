#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radsynth/imaging/gray_image.hpp"

namespace radsynth::imaging {

enum class TriageStatus { Pending, Accepted, Rejected };

std::string to_string(TriageStatus status);
TriageStatus parse_triage_status(const std::string& text);

struct ManifestEntry {
    std::string source_id;
    std::string path;  // relative to the manifest's directory, or absolute
    Origin origin = Origin::Real;
    std::optional<int> checkpoint;
    Facing facing = Facing::Unknown;
    std::optional<bool> inverted;
    TriageStatus triage_status = TriageStatus::Pending;
    std::optional<std::string> reject_reason;

    bool operator==(const ManifestEntry&) const = default;
};

/// Image index persisted as JSON Lines, one entry per image. The seed is
/// written into every entry so each line is self-contained.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on duplicate source ids or a rejected
    /// entry without a reason.
    void validate() const;

    const ManifestEntry* find(const std::string& source_id) const;

    std::size_t count(TriageStatus status) const;

    /// Entries not rejected, in manifest order.
    std::vector<ManifestEntry> usable() const;

    bool operator==(const DatasetManifest&) const = default;
};

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string manifest_to_jsonl(const DatasetManifest& manifest);

/// Resolves an entry path against the directory holding the manifest.
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         const ManifestEntry& entry);

/// Loads an entry's image and attaches its metadata.
GrayImage load_entry_image(const std::filesystem::path& manifest_path, const ManifestEntry& entry);

}  // namespace radsynth::imaging
