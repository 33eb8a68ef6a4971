#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "radsynth/imaging/manifest.hpp"
#include "radsynth/memaudit/review.hpp"
#include "radsynth/turingstats/quartet.hpp"

namespace radsynth::study {

struct ServiceConfig {
    std::filesystem::path quartet_file;  // rater-facing file; never the key
    std::vector<std::filesystem::path> manifests;  // resolve every served image id
    std::filesystem::path state_dir;     // append-only logs live here
    std::optional<std::filesystem::path> bundle_dir;       // review bundle for pair triage
    std::optional<std::filesystem::path> triage_manifest;  // images awaiting accept/reject
    std::uint64_t seed = 0;
};

/// HTTP-free reply: status code, body and content type.
struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

enum class SessionMode { Rating, Triage };

/// Serves blinded items and records answers. Every method is thread-safe;
/// requests are serialized internally. State is rebuilt from the logs in
/// state_dir at construction, so a restart resumes every session.
class StudyService {
public:
    explicit StudyService(ServiceConfig config);
    ~StudyService();

    /// POST /api/sessions {rater_id, mode: rating|triage}. Re-creating an
    /// existing (rater, mode) session returns the same session.
    Reply create_session(const std::string& body);
    /// GET /api/session/{id}/next
    Reply next_item(const std::string& session_id);
    /// POST /api/session/{id}/response
    Reply submit(const std::string& session_id, const std::string& body);
    /// GET /api/session/{id}/progress
    Reply progress(const std::string& session_id);
    /// GET /api/image/{token}: PNG bytes.
    Reply image(const std::string& token);

    std::filesystem::path response_log() const;
    std::filesystem::path session_log() const;
    std::filesystem::path audit_verdict_log() const;
    std::filesystem::path image_verdict_log() const;

    /// Opaque token for an image id; letters only.
    std::string token_for(const std::string& image_id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Session ids are a pure function of (seed, mode, rater_id).
std::string session_id_for(std::uint64_t seed, SessionMode mode, const std::string& rater_id);

/// Item order for one rater: a seeded permutation of 0..n-1.
std::vector<std::size_t> session_order(std::uint64_t seed, const std::string& rater_id, std::size_t n);

/// Runs the HTTP front end on a background thread.
class HttpServer {
public:
    explicit HttpServer(StudyService& service, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving; port 0 picks a free port. Returns the bound
    /// port. Throws std::runtime_error when binding fails.
    int start(const std::string& host, int port);
    /// Blocks until stop() is called from another thread or a signal.
    void wait();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace radsynth::study
