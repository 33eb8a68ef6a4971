#include "radsynth/imaging/manifest.hpp"

#include <set>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/imaging/image_io.hpp"

namespace radsynth::imaging {

using jsonl::json;

std::string to_string(TriageStatus status) {
    switch (status) {
        case TriageStatus::Pending:
            return "pending";
        case TriageStatus::Accepted:
            return "accepted";
        case TriageStatus::Rejected:
            break;
    }
    return "rejected";
}

TriageStatus parse_triage_status(const std::string& text) {
    if (text == "pending") return TriageStatus::Pending;
    if (text == "accepted") return TriageStatus::Accepted;
    if (text == "rejected") return TriageStatus::Rejected;
    throw std::invalid_argument("unknown triage_status '" + text + "'");
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (e.source_id.empty()) {
            throw std::invalid_argument("manifest: empty source_id");
        }
        if (!seen.insert(e.source_id).second) {
            throw std::invalid_argument("manifest: duplicate source_id '" + e.source_id + "'");
        }
        if (e.triage_status == TriageStatus::Rejected &&
            (!e.reject_reason || e.reject_reason->empty())) {
            throw std::invalid_argument("manifest: rejected entry '" + e.source_id +
                                        "' has no reject_reason");
        }
    }
}

const ManifestEntry* DatasetManifest::find(const std::string& source_id) const {
    for (const auto& e : entries) {
        if (e.source_id == source_id) return &e;
    }
    return nullptr;
}

std::size_t DatasetManifest::count(TriageStatus status) const {
    std::size_t n = 0;
    for (const auto& e : entries) {
        if (e.triage_status == status) ++n;
    }
    return n;
}

std::vector<ManifestEntry> DatasetManifest::usable() const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries) {
        if (e.triage_status != TriageStatus::Rejected) out.push_back(e);
    }
    return out;
}

namespace {

json entry_to_json(const ManifestEntry& e, std::uint64_t seed) {
    json j;
    j["source_id"] = e.source_id;
    j["path"] = e.path;
    j["origin"] = to_string(e.origin);
    j["checkpoint"] = e.checkpoint ? json(*e.checkpoint) : json(nullptr);
    j["facing"] = to_string(e.facing);
    j["inverted_flag"] = e.inverted ? json(*e.inverted) : json(nullptr);
    j["triage_status"] = to_string(e.triage_status);
    j["reject_reason"] = e.reject_reason ? json(*e.reject_reason) : json(nullptr);
    j["seed"] = seed;
    return j;
}

ManifestEntry entry_from_json(const json& j) {
    ManifestEntry e;
    e.source_id = j.at("source_id").get<std::string>();
    e.path = j.at("path").get<std::string>();
    e.origin = parse_origin(j.at("origin").get<std::string>());
    if (j.contains("checkpoint") && !j["checkpoint"].is_null()) e.checkpoint = j["checkpoint"].get<int>();
    e.facing = parse_facing(j.value("facing", std::string("unknown")));
    if (j.contains("inverted_flag") && !j["inverted_flag"].is_null()) e.inverted = j["inverted_flag"].get<bool>();
    e.triage_status = parse_triage_status(j.value("triage_status", std::string("pending")));
    if (j.contains("reject_reason") && !j["reject_reason"].is_null()) {
        e.reject_reason = j["reject_reason"].get<std::string>();
    }
    return e;
}

}  // namespace

std::string manifest_to_jsonl(const DatasetManifest& manifest) {
    std::vector<json> rows;
    rows.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) rows.push_back(entry_to_json(e, manifest.seed));
    return jsonl::dump_lines(rows);
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    DatasetManifest manifest;
    bool first = true;
    for (const auto& row : jsonl::read(path)) {
        manifest.entries.push_back(entry_from_json(row));
        if (first && row.contains("seed")) manifest.seed = row["seed"].get<std::uint64_t>();
        first = false;
    }
    manifest.validate();
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    manifest.validate();
    write_text_file(path, manifest_to_jsonl(manifest));
}

std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         const ManifestEntry& entry) {
    const std::filesystem::path p(entry.path);
    if (p.is_absolute()) return p;
    return manifest_path.parent_path() / p;
}

GrayImage load_entry_image(const std::filesystem::path& manifest_path, const ManifestEntry& entry) {
    GrayImage img = read_image(resolve_entry_path(manifest_path, entry));
    img.meta.source_id = entry.source_id;
    img.meta.origin = entry.origin;
    img.meta.checkpoint = entry.checkpoint;
    img.meta.facing = entry.facing;
    img.meta.inverted = entry.inverted;
    return img;
}

}  // namespace radsynth::imaging
