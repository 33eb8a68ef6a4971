#include "radsynth/pipeline/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "../common/jsonl.hpp"

namespace radsynth::pipeline {

ImageCounts count_images(const imaging::DatasetManifest& manifest) {
    ImageCounts c;
    c.generated = manifest.entries.size();
    c.accepted = manifest.count(imaging::TriageStatus::Accepted);
    c.rejected = manifest.count(imaging::TriageStatus::Rejected);
    c.pending = manifest.count(imaging::TriageStatus::Pending);
    return c;
}

void RunLedger::append(const StageRecord& r) const {
    if (r.counts.count("generated")) {
        auto get = [&](const char* k) {
            const auto it = r.counts.find(k);
            return it == r.counts.end() ? std::uint64_t{0} : it->second;
        };
        if (get("generated") != get("accepted") + get("rejected") + get("pending")) {
            throw std::logic_error("ledger: counts for stage '" + r.stage + "' do not reconcile");
        }
    }
    jsonl::json j{{"stage", r.stage},     {"inputs_digest", r.inputs_digest}, {"outputs_digest", r.outputs_digest},
                  {"seed", r.seed},       {"started", r.started},             {"finished", r.finished},
                  {"counts", r.counts}};
    if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot open ledger " + path_.string());
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("ledger write failed: " + path_.string());
}

std::vector<StageRecord> RunLedger::records() const {
    std::vector<StageRecord> out;
    if (!std::filesystem::exists(path_)) return out;
    for (const auto& j : jsonl::read(path_)) {
        StageRecord r;
        r.stage = j.at("stage").get<std::string>();
        r.inputs_digest = j.value("inputs_digest", std::string{});
        r.outputs_digest = j.value("outputs_digest", std::string{});
        r.seed = j.value("seed", std::uint64_t{0});
        r.started = j.value("started", std::string{});
        r.finished = j.value("finished", std::string{});
        if (j.contains("counts")) r.counts = j["counts"].get<std::map<std::string, std::uint64_t>>();
        out.push_back(std::move(r));
    }
    return out;
}

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

StageLock::StageLock(const std::filesystem::path& dir) : file_(dir / ".radsynth.lock") {
    std::filesystem::create_directories(dir);
    const int fd = ::open(file_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw std::runtime_error("another stage holds " + file_.string() + " (remove it if no stage is running)");
        }
        throw std::runtime_error("cannot create lock " + file_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

StageLock::~StageLock() {
    std::error_code ec;
    std::filesystem::remove(file_, ec);
}

}  // namespace radsynth::pipeline
