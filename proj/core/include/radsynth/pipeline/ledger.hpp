#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "radsynth/imaging/manifest.hpp"

namespace radsynth::pipeline {

/// Image accounting for one manifest: generated == accepted + rejected +
/// pending must always hold.
struct ImageCounts {
    std::uint64_t generated = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::uint64_t pending = 0;
    bool reconciles() const { return generated == accepted + rejected + pending; }
    bool operator==(const ImageCounts&) const = default;
};

ImageCounts count_images(const imaging::DatasetManifest& manifest);

struct StageRecord {
    std::string stage;
    std::string inputs_digest;
    std::string outputs_digest;
    std::uint64_t seed = 0;
    std::string started;   // UTC, ISO 8601
    std::string finished;
    std::map<std::string, std::uint64_t> counts;
};

/// Append-only JSON Lines ledger of pipeline stages.
class RunLedger {
public:
    explicit RunLedger(std::filesystem::path path) : path_(std::move(path)) {}
    const std::filesystem::path& path() const { return path_; }

    /// Throws std::logic_error when counts contain "generated" and do not
    /// reconcile, before anything is written.
    void append(const StageRecord& record) const;
    std::vector<StageRecord> records() const;

private:
    std::filesystem::path path_;
};

std::string utc_now_iso();

/// Exclusive per-directory lock held for the lifetime of the object.
class StageLock {
public:
    /// Throws std::runtime_error when the lock file already exists.
    explicit StageLock(const std::filesystem::path& dir);
    ~StageLock();
    StageLock(const StageLock&) = delete;
    StageLock& operator=(const StageLock&) = delete;
    const std::filesystem::path& file() const { return file_; }

private:
    std::filesystem::path file_;
};

}  // namespace radsynth::pipeline
