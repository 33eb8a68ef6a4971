#include "radsynth/study/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/common/rng.hpp"
#include "radsynth/imaging/image_io.hpp"
#include "radsynth/pipeline/ledger.hpp"
#include "radsynth/pipeline/triage.hpp"
#include "radsynth/turingstats/responses.hpp"

namespace radsynth::study {

using jsonl::json;

namespace {

std::string mode_name(SessionMode m) { return m == SessionMode::Rating ? "rating" : "triage"; }

Reply json_reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

Reply error_reply(int status, const std::string& message, const std::vector<std::string>& fields = {}) {
    json body{{"error", message}};
    if (!fields.empty()) body["fields"] = fields;
    return json_reply(status, body);
}

// One write() per record on an O_APPEND descriptor, then fdatasync: a crash
// leaves either the whole line or nothing.
void append_line(const std::filesystem::path& path, const std::string& line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
    std::size_t done = 0;
    while (done < line.size()) {
        const auto n = ::write(fd, line.data() + done, line.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw std::runtime_error("write failed on " + path.string());
        }
        done += static_cast<std::size_t>(n);
    }
    ::fdatasync(fd);
    ::close(fd);
}

std::vector<json> read_if_exists(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return jsonl::read(path);
}

std::string letters_token(const std::string& hex) {
    std::string out;
    for (char c : hex.substr(0, 20)) {
        const int v = (c >= '0' && c <= '9') ? c - '0' : c - 'a' + 10;
        out.push_back(static_cast<char>('a' + v));
    }
    return out;
}

}  // namespace

std::string session_id_for(std::uint64_t seed, SessionMode mode, const std::string& rater_id) {
    return sha256_hex("session|" + std::to_string(seed) + "|" + mode_name(mode) + "|" + rater_id).substr(0, 24);
}

std::vector<std::size_t> session_order(std::uint64_t seed, const std::string& rater_id, std::size_t n) {
    const std::uint64_t stream = std::stoull(sha256_hex("order|" + rater_id).substr(0, 16), nullptr, 16);
    Rng rng = Rng::derive(seed, stream);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    return order;
}

struct StudyService::Impl {
    ServiceConfig cfg;
    std::mutex mu;

    struct ImageSource {
        std::filesystem::path manifest;  // empty for bundle composites
        imaging::ManifestEntry entry;
        std::filesystem::path file;
    };
    std::map<std::string, std::string> token_of;  // image key -> token
    std::map<std::string, ImageSource> source_of;  // token -> source
    std::map<std::string, std::vector<std::uint8_t>> png_cache;

    std::vector<turing::BlindQuartet> quartets;
    std::map<std::string, std::size_t> quartet_pos;

    struct TriageItem {
        std::string item_id;
        bool is_pair = false;
        std::size_t rank = 0;       // pairs
        std::string source_id;      // images
        std::string image_key;
    };
    std::vector<TriageItem> triage_items;
    std::map<std::string, std::size_t> triage_pos;

    struct Session {
        std::string id;
        std::string rater_id;
        SessionMode mode = SessionMode::Rating;
        std::vector<std::size_t> order;
        std::set<std::string> answered;  // quartet ids or triage item ids
    };
    std::map<std::string, Session> sessions;
    audit::VerdictLog pair_verdicts;

    std::string register_image(const std::string& key, ImageSource src) {
        const auto it = token_of.find(key);
        if (it != token_of.end()) return it->second;
        const std::string token = letters_token(sha256_hex("image|" + std::to_string(cfg.seed) + "|" + key));
        if (source_of.count(token)) throw std::runtime_error("image token collision for " + key);
        token_of[key] = token;
        source_of[token] = std::move(src);
        return token;
    }

    void load() {
        std::filesystem::create_directories(cfg.state_dir);
        std::map<std::string, ImageSource> by_id;
        for (const auto& m : cfg.manifests) {
            for (const auto& e : imaging::read_manifest(m).entries) {
                by_id[e.source_id] = {m, e, imaging::resolve_entry_path(m, e)};
            }
        }
        quartets = turing::read_blind_quartets(cfg.quartet_file);
        for (std::size_t i = 0; i < quartets.size(); ++i) {
            quartet_pos[quartets[i].quartet_id] = i;
            for (const auto& id : quartets[i].images) {
                const auto it = by_id.find(id);
                if (it == by_id.end()) throw std::runtime_error("quartet image '" + id + "' is in no manifest");
                register_image("id:" + id, it->second);
            }
        }
        if (cfg.bundle_dir) {
            for (const auto& b : audit::read_bundle_index(*cfg.bundle_dir / "index.jsonl")) {
                TriageItem item;
                item.item_id = "pair-" + std::to_string(b.rank);
                item.is_pair = true;
                item.rank = b.rank;
                item.image_key = "bundle:" + b.file;
                register_image(item.image_key, {{}, {}, *cfg.bundle_dir / b.file});
                triage_items.push_back(item);
            }
        }
        if (cfg.triage_manifest) {
            const auto manifest = imaging::read_manifest(*cfg.triage_manifest);
            for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
                const auto& e = manifest.entries[i];
                TriageItem item;
                item.item_id = "image-" + std::to_string(i + 1);
                item.source_id = e.source_id;
                item.image_key = "id:" + e.source_id;
                register_image(item.image_key,
                               {*cfg.triage_manifest, e, imaging::resolve_entry_path(*cfg.triage_manifest, e)});
                triage_items.push_back(item);
            }
        }
        for (std::size_t i = 0; i < triage_items.size(); ++i) triage_pos[triage_items[i].item_id] = i;
        replay();
    }

    Session make_session(const std::string& rater_id, SessionMode mode) const {
        Session s;
        s.id = session_id_for(cfg.seed, mode, rater_id);
        s.rater_id = rater_id;
        s.mode = mode;
        if (mode == SessionMode::Rating) {
            s.order = session_order(cfg.seed, rater_id, quartets.size());
        } else {
            s.order.resize(triage_items.size());
            for (std::size_t i = 0; i < s.order.size(); ++i) s.order[i] = i;
        }
        return s;
    }

    Session* find_by_rater(const std::string& rater, SessionMode mode) {
        const auto it = sessions.find(session_id_for(cfg.seed, mode, rater));
        return it == sessions.end() ? nullptr : &it->second;
    }

    void replay() {
        for (const auto& j : read_if_exists(session_log())) {
            const auto rater = j.at("rater_id").get<std::string>();
            const auto mode = j.at("mode").get<std::string>() == "triage" ? SessionMode::Triage : SessionMode::Rating;
            Session s = make_session(rater, mode);
            sessions.emplace(s.id, std::move(s));
        }
        for (const auto& j : read_if_exists(response_log())) {
            const auto r = turing::response_from_json_text(j.dump());
            if (Session* s = find_by_rater(r.rater_id, SessionMode::Rating)) s->answered.insert(r.quartet_id);
        }
        for (const auto& j : read_if_exists(audit_log())) {
            const auto v = audit::verdict_from_json_text(j.dump());
            pair_verdicts.add(v);
            if (Session* s = find_by_rater(v.reviewer_id, SessionMode::Triage)) {
                s->answered.insert("pair-" + std::to_string(v.pair_rank));
            }
        }
        for (const auto& j : read_if_exists(image_log())) {
            const auto v = pipeline::image_verdict_from_json_text(j.dump());
            Session* s = find_by_rater(v.reviewer_id, SessionMode::Triage);
            if (!s) continue;
            for (const auto& item : triage_items) {
                if (!item.is_pair && item.source_id == v.source_id) s->answered.insert(item.item_id);
            }
        }
    }

    std::filesystem::path session_log() const { return cfg.state_dir / "sessions.jsonl"; }
    std::filesystem::path response_log() const { return cfg.state_dir / "responses.jsonl"; }
    std::filesystem::path audit_log() const { return cfg.state_dir / "audit_verdicts.jsonl"; }
    std::filesystem::path image_log() const { return cfg.state_dir / "image_verdicts.jsonl"; }

    std::string item_id_at(const Session& s, std::size_t idx) const {
        return s.mode == SessionMode::Rating ? quartets[s.order[idx]].quartet_id : triage_items[s.order[idx]].item_id;
    }

    // A pair already reviewed twice by others is skipped for this reviewer.
    bool skippable(const Session& s, std::size_t idx) const {
        if (s.mode != SessionMode::Triage) return false;
        const auto& item = triage_items[s.order[idx]];
        return item.is_pair && pair_verdicts.complete(item.rank) && !pair_verdicts.has(item.rank, s.rater_id);
    }

    std::optional<std::size_t> next_index(const Session& s) const {
        for (std::size_t i = 0; i < s.order.size(); ++i) {
            if (!s.answered.count(item_id_at(s, i)) && !skippable(s, i)) return i;
        }
        return std::nullopt;
    }

    std::string image_url(const std::string& key) const { return "/api/image/" + token_of.at(key); }

    json payload(const Session& s, std::size_t idx) const {
        if (s.mode == SessionMode::Rating) {
            const auto& q = quartets[s.order[idx]];
            json images = json::array();
            for (const auto& id : q.images) images.push_back(image_url("id:" + id));
            return {{"quartet_id", q.quartet_id}, {"images", images}};
        }
        const auto& item = triage_items[s.order[idx]];
        return {{"item_id", item.item_id}, {"kind", item.is_pair ? "pair" : "image"},
                {"images", json::array({image_url(item.image_key)})}};
    }

    Reply submit_rating(Session& s, const json& body) {
        json record = body;
        record["rater_id"] = s.rater_id;
        record["timestamp"] = pipeline::utc_now_iso();
        std::vector<std::string> bad;
        const auto r = turing::response_from_json_text(record.dump(), &bad);
        if (!bad.empty()) return error_reply(422, "validation failed", bad);
        if (!quartet_pos.count(r.quartet_id)) return error_reply(422, "unknown quartet", {"quartet_id"});
        if (s.answered.count(r.quartet_id)) return error_reply(409, "quartet already answered");
        const auto next = next_index(s);
        if (!next) return error_reply(409, "session complete");
        if (item_id_at(s, *next) != r.quartet_id) return error_reply(422, "not the current quartet", {"quartet_id"});
        append_line(response_log(), turing::response_to_jsonl(r));
        s.answered.insert(r.quartet_id);
        return json_reply(200, {{"accepted", true}, {"next_index", s.answered.size()}});
    }

    Reply submit_triage(Session& s, const json& body) {
        if (!body.contains("item_id") || !body["item_id"].is_string()) return error_reply(422, "validation failed", {"item_id"});
        const auto item_id = body["item_id"].get<std::string>();
        const auto pos = triage_pos.find(item_id);
        if (pos == triage_pos.end()) return error_reply(422, "unknown item", {"item_id"});
        const auto& item = triage_items[pos->second];
        std::vector<std::string> bad;
        if (item.is_pair) {
            audit::AuditVerdict v;
            v.pair_rank = item.rank;
            v.reviewer_id = s.rater_id;
            try {
                v.verdict = audit::parse_verdict(body.value("verdict", std::string{}));
            } catch (const std::exception&) {
                bad.emplace_back("verdict");
            }
            if (body.contains("note") && !body["note"].is_string()) bad.emplace_back("note");
            if (!bad.empty()) return error_reply(422, "validation failed", bad);
            v.note = body.value("note", std::string{});
            if (s.answered.count(item_id) || pair_verdicts.has(v.pair_rank, v.reviewer_id)) {
                return error_reply(409, "item already answered");
            }
            if (pair_verdicts.for_pair(v.pair_rank).size() >= 2) return error_reply(409, "pair already has two reviews");
            pair_verdicts.add(v);
            append_line(audit_log(), audit::verdict_to_jsonl(v));
        } else {
            pipeline::ImageVerdict v;
            v.source_id = item.source_id;
            v.reviewer_id = s.rater_id;
            const auto decision = body.value("decision", std::string{});
            if (decision != "accept" && decision != "reject") bad.emplace_back("decision");
            v.reject = decision == "reject";
            v.reason = body.contains("reason") && body["reason"].is_string() ? body["reason"].get<std::string>() : "";
            if (v.reject && v.reason.empty()) bad.emplace_back("reason");
            if (!bad.empty()) return error_reply(422, "validation failed", bad);
            if (s.answered.count(item_id)) return error_reply(409, "item already answered");
            append_line(image_log(), pipeline::image_verdict_to_jsonl(v));
        }
        s.answered.insert(item_id);
        return json_reply(200, {{"accepted", true}, {"next_index", s.answered.size()}});
    }
};

StudyService::StudyService(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
    impl_->cfg = std::move(config);
    impl_->load();
}

StudyService::~StudyService() = default;

Reply StudyService::create_session(const std::string& body) {
    std::lock_guard lock(impl_->mu);
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(422, "validation failed", {"body"});
    std::vector<std::string> bad;
    std::string rater;
    if (j.contains("rater_id") && j["rater_id"].is_string()) rater = j["rater_id"].get<std::string>();
    if (rater.empty()) bad.emplace_back("rater_id");
    SessionMode mode = SessionMode::Rating;
    if (j.contains("mode")) {
        const auto m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
        if (m == "triage") {
            mode = SessionMode::Triage;
        } else if (m != "rating") {
            bad.emplace_back("mode");
        }
    }
    if (!bad.empty()) return error_reply(422, "validation failed", bad);
    const std::string id = session_id_for(impl_->cfg.seed, mode, rater);
    int status = 200;
    if (!impl_->sessions.count(id)) {
        append_line(impl_->session_log(), json{{"session_id", id}, {"rater_id", rater}, {"mode", mode_name(mode)}}.dump() + "\n");
        impl_->sessions.emplace(id, impl_->make_session(rater, mode));
        status = 201;
    }
    const auto& s = impl_->sessions.at(id);
    return json_reply(status, {{"session_id", id}, {"mode", mode_name(mode)}, {"total", s.order.size()},
                               {"answered", s.answered.size()}});
}

Reply StudyService::next_item(const std::string& session_id) {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->sessions.find(session_id);
    if (it == impl_->sessions.end()) return error_reply(404, "unknown session");
    const auto next = impl_->next_index(it->second);
    if (!next) return json_reply(200, {{"done", true}});
    return json_reply(200, impl_->payload(it->second, *next));
}

Reply StudyService::submit(const std::string& session_id, const std::string& body) {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->sessions.find(session_id);
    if (it == impl_->sessions.end()) return error_reply(404, "unknown session");
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(422, "validation failed", {"body"});
    return it->second.mode == SessionMode::Rating ? impl_->submit_rating(it->second, j)
                                                  : impl_->submit_triage(it->second, j);
}

Reply StudyService::progress(const std::string& session_id) {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->sessions.find(session_id);
    if (it == impl_->sessions.end()) return error_reply(404, "unknown session");
    const auto& s = it->second;
    return json_reply(200, {{"session_id", s.id},
                            {"mode", mode_name(s.mode)},
                            {"answered", s.answered.size()},
                            {"total", s.order.size()},
                            {"done", !impl_->next_index(s).has_value()}});
}

Reply StudyService::image(const std::string& token) {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->source_of.find(token);
    if (it == impl_->source_of.end()) return error_reply(404, "unknown image");
    auto cached = impl_->png_cache.find(token);
    if (cached == impl_->png_cache.end()) {
        std::vector<std::uint8_t> bytes;
        try {
            bytes = imaging::encode_png(imaging::read_image(it->second.file));
        } catch (const std::exception& e) {
            return error_reply(500, std::string("image unavailable: ") + e.what());
        }
        cached = impl_->png_cache.emplace(token, std::move(bytes)).first;
    }
    return {200, std::string(cached->second.begin(), cached->second.end()), "image/png"};
}

std::filesystem::path StudyService::response_log() const { return impl_->response_log(); }
std::filesystem::path StudyService::session_log() const { return impl_->session_log(); }
std::filesystem::path StudyService::audit_verdict_log() const { return impl_->audit_log(); }
std::filesystem::path StudyService::image_verdict_log() const { return impl_->image_log(); }

std::string StudyService::token_for(const std::string& image_id) const {
    std::lock_guard lock(impl_->mu);
    const auto it = impl_->token_of.find("id:" + image_id);
    if (it == impl_->token_of.end()) throw std::out_of_range("no token for image '" + image_id + "'");
    return it->second;
}

}  // namespace radsynth::study
