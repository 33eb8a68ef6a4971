#include "radsynth/pipeline/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "../common/jsonl.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/diffusion/data.hpp"
#include "radsynth/diffusion/sampler.hpp"
#include "radsynth/diffusion/trainer.hpp"
#include "radsynth/evalmetrics/embedder.hpp"
#include "radsynth/evalmetrics/features_csv.hpp"
#include "radsynth/evalmetrics/fid_curve.hpp"
#include "radsynth/imaging/image_io.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/imaging/phantom.hpp"
#include "radsynth/imaging/transforms.hpp"
#include "radsynth/memaudit/review.hpp"
#include "radsynth/memaudit/similarity.hpp"
#include "radsynth/neuralcore/checkpoint.hpp"
#include "radsynth/pipeline/config.hpp"
#include "radsynth/pipeline/ledger.hpp"
#include "radsynth/pipeline/triage.hpp"
#include "radsynth/study/service.hpp"
#include "radsynth/turingstats/quartet.hpp"
#include "radsynth/turingstats/report.hpp"

namespace radsynth::pipeline {
namespace fs = std::filesystem;
using imaging::DatasetManifest;
using imaging::GrayImage;
using imaging::ManifestEntry;

namespace {

struct Globals {
    std::optional<std::string> config_file;
    std::vector<std::string> sets;
    std::optional<std::string> ledger;
};

PipelineConfig make_config(const Globals& g) {
    ConfigValues overrides;
    for (const auto& kv : g.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    std::optional<fs::path> file;
    if (g.config_file) file = *g.config_file;
    return load_config(file, overrides);
}

/// Runs a stage under a lock on `workdir` and appends a ledger record.
class Stage {
public:
    Stage(std::string name, const fs::path& workdir, const Globals& g, std::uint64_t seed)
        : lock_(workdir), ledger_(g.ledger ? fs::path(*g.ledger) : workdir / "run_ledger.jsonl") {
        rec_.stage = std::move(name);
        rec_.seed = seed;
        rec_.started = utc_now_iso();
    }
    void inputs(const std::vector<fs::path>& files) { rec_.inputs_digest = sha256_files(files); }
    void outputs(const std::vector<fs::path>& files) { rec_.outputs_digest = sha256_files(files); }
    void count(const std::string& key, std::uint64_t v) { rec_.counts[key] = v; }
    void counts(const ImageCounts& c) {
        count("generated", c.generated);
        count("accepted", c.accepted);
        count("rejected", c.rejected);
        count("pending", c.pending);
    }
    void finish() {
        rec_.finished = utc_now_iso();
        ledger_.append(rec_);
    }

private:
    StageLock lock_;
    RunLedger ledger_;
    StageRecord rec_;
};

std::vector<fs::path> manifest_files(const fs::path& manifest_path, const DatasetManifest& m) {
    std::vector<fs::path> files{manifest_path};
    for (const auto& e : m.entries) files.push_back(imaging::resolve_entry_path(manifest_path, e));
    return files;
}

std::vector<GrayImage> load_images(const fs::path& manifest_path, const std::vector<ManifestEntry>& entries) {
    std::vector<GrayImage> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(imaging::load_entry_image(manifest_path, e));
    return out;
}

// Entries carrying absolute paths so a manifest can be written anywhere.
std::vector<ManifestEntry> absolutized(const fs::path& manifest_path, std::vector<ManifestEntry> entries) {
    for (auto& e : entries) e.path = fs::absolute(imaging::resolve_entry_path(manifest_path, e)).string();
    return entries;
}

ManifestEntry entry_for(const GrayImage& img, const std::string& file) {
    ManifestEntry e;
    e.source_id = img.meta.source_id;
    e.path = file;
    e.origin = img.meta.origin;
    e.checkpoint = img.meta.checkpoint;
    e.facing = img.meta.facing;
    e.inverted = img.meta.inverted;
    return e;
}

std::optional<int> checkpoint_index_from_name(const fs::path& file) {
    static const std::regex re(R"(ckpt_(\d+)\.bin)");
    std::smatch m;
    const std::string name = file.filename().string();
    if (std::regex_match(name, m, re)) return std::stoi(m[1]);
    return std::nullopt;
}

// ---- subcommands ---------------------------------------------------------

int run_phantom_gen(const Globals& g, int n, int size, std::optional<std::uint64_t> seed_opt, const fs::path& out_dir,
                    std::ostream& out) {
    const auto cfg = make_config(g);
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    fs::create_directories(out_dir);
    Stage stage("phantom-gen", out_dir, g, seed);
    const auto images = imaging::make_phantom_set(n, size, seed);
    DatasetManifest m;
    m.seed = seed;
    std::vector<fs::path> written;
    for (const auto& img : images) {
        const std::string file = img.meta.source_id + ".png";
        imaging::write_png(img, out_dir / file);
        written.push_back(out_dir / file);
        auto e = entry_for(img, file);
        e.triage_status = imaging::TriageStatus::Accepted;
        m.entries.push_back(std::move(e));
    }
    const fs::path manifest_path = out_dir / "manifest.jsonl";
    imaging::write_manifest(m, manifest_path);
    written.insert(written.begin(), manifest_path);
    stage.inputs({});
    stage.outputs(written);
    stage.count("images", images.size());
    stage.finish();
    out << "wrote " << images.size() << " phantoms to " << out_dir.string() << "\n";
    return 0;
}

int run_preprocess(const Globals& g, const fs::path& in_manifest, const fs::path& out_dir, std::optional<int> size_opt,
                   bool auto_negative, std::ostream& out) {
    const auto cfg = make_config(g);
    const int size = size_opt.value_or(cfg.image_size);
    const auto src = imaging::read_manifest(in_manifest);
    fs::create_directories(out_dir);
    Stage stage("preprocess", out_dir, g, src.seed);
    stage.inputs(manifest_files(in_manifest, src));
    DatasetManifest dst;
    dst.seed = src.seed;
    std::vector<fs::path> written;
    std::size_t inverted = 0;
    std::size_t mirrored = 0;
    std::size_t flagged = 0;
    for (const auto& e : src.entries) {
        GrayImage img = imaging::load_entry_image(in_manifest, e);
        // A manifest polarity flag overrides the heuristic.
        const bool negative = e.inverted ? *e.inverted : (auto_negative && imaging::detect_negative(img));
        img.meta.inverted = false;
        if (negative) {
            img = imaging::invert(img);
            ++inverted;
        }
        img = imaging::resample(img, size, size);
        const auto oriented = imaging::standardize_orientation(img, e.facing);
        if (e.facing == imaging::Facing::Right) ++mirrored;
        const std::string file = e.source_id + ".png";
        imaging::write_png(oriented.image, out_dir / file);
        written.push_back(out_dir / file);
        ManifestEntry o = e;
        o.path = file;
        o.facing = oriented.image.meta.facing;
        o.inverted = oriented.image.meta.inverted;
        if (oriented.needs_triage) {
            o.triage_status = imaging::TriageStatus::Pending;
            ++flagged;
        }
        dst.entries.push_back(std::move(o));
    }
    const fs::path manifest_path = out_dir / "manifest.jsonl";
    imaging::write_manifest(dst, manifest_path);
    written.insert(written.begin(), manifest_path);
    stage.outputs(written);
    stage.count("images", dst.entries.size());
    stage.count("inverted", inverted);
    stage.count("mirrored", mirrored);
    stage.count("orientation_triage", flagged);
    stage.finish();
    out << "preprocessed " << dst.entries.size() << " images (" << inverted << " inverted, " << mirrored
        << " mirrored, " << flagged << " need orientation triage)\n";
    return 0;
}

int run_split(const Globals& g, const fs::path& in_manifest, const fs::path& out_dir, std::optional<double> frac_opt,
              std::optional<std::uint64_t> seed_opt, std::ostream& out) {
    const auto cfg = make_config(g);
    const double frac = frac_opt.value_or(cfg.train.val_fraction);
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    const auto src = imaging::read_manifest(in_manifest);
    fs::create_directories(out_dir);
    Stage stage("split", out_dir, g, seed);
    stage.inputs({in_manifest});
    DatasetManifest usable;
    usable.entries = src.usable();
    auto [train_entries, val_entries] = diffusion::train_val_split(usable, frac, seed);
    DatasetManifest train_m{absolutized(in_manifest, std::move(train_entries)), seed};
    DatasetManifest val_m{absolutized(in_manifest, std::move(val_entries)), seed};
    imaging::write_manifest(train_m, out_dir / "train.jsonl");
    imaging::write_manifest(val_m, out_dir / "val.jsonl");
    stage.outputs({out_dir / "train.jsonl", out_dir / "val.jsonl"});
    stage.count("train", train_m.entries.size());
    stage.count("val", val_m.entries.size());
    stage.finish();
    out << "train " << train_m.entries.size() << ", val " << val_m.entries.size() << "\n";
    return 0;
}

struct TrainFlags {
    fs::path train_manifest;
    std::optional<fs::path> val_manifest;
    std::optional<fs::path> out_dir;
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> interval;
    std::optional<std::size_t> batch;
    std::optional<int> timesteps;
    std::optional<double> lr;
    std::optional<std::uint64_t> seed;
};

int run_train(const Globals& g, const TrainFlags& f, std::ostream& out) {
    auto cfg = make_config(g);
    if (f.steps) cfg.train.max_steps = *f.steps;
    if (f.interval) cfg.train.checkpoint_interval = *f.interval;
    if (f.batch) cfg.train.batch_size = *f.batch;
    if (f.timesteps) cfg.timesteps = *f.timesteps;
    if (f.lr) cfg.train.lr = *f.lr;
    if (f.seed) cfg.seed = cfg.train.seed = *f.seed;
    cfg.train.arch.timesteps = static_cast<std::uint32_t>(cfg.timesteps);
    cfg.train.validate();
    const fs::path ckpt_dir = f.out_dir.value_or(cfg.checkpoint_dir);
    fs::create_directories(ckpt_dir);
    Stage stage("train", ckpt_dir, g, cfg.train.seed);
    const auto train_m = imaging::read_manifest(f.train_manifest);
    const auto train_images = load_images(f.train_manifest, train_m.usable());
    std::vector<GrayImage> val_images;
    std::vector<fs::path> inputs = manifest_files(f.train_manifest, train_m);
    if (f.val_manifest) {
        const auto val_m = imaging::read_manifest(*f.val_manifest);
        val_images = load_images(*f.val_manifest, val_m.usable());
        const auto more = manifest_files(*f.val_manifest, val_m);
        inputs.insert(inputs.end(), more.begin(), more.end());
    }
    stage.inputs(inputs);
    const auto result = diffusion::train(train_images, val_images, cfg.train, cfg.schedule(), ckpt_dir,
                                         [&out](const diffusion::CheckpointRecord& r) {
                                             out << "checkpoint " << r.checkpoint_index << " step " << r.step
                                                 << " train_loss " << r.train_loss;
                                             if (r.val_loss) out << " val_loss " << *r.val_loss;
                                             out << "\n" << std::flush;
                                         });
    std::vector<fs::path> outputs{ckpt_dir / "checkpoints.jsonl", ckpt_dir / "train_loss.csv"};
    for (const auto& r : result.records) outputs.push_back(r.file);
    stage.outputs(outputs);
    stage.count("steps", result.step_losses.size());
    stage.count("checkpoints", result.records.size());
    stage.finish();
    return 0;
}

struct SampleFlags {
    fs::path checkpoint;
    int n = 0;
    std::optional<std::uint64_t> seed;
    fs::path out_dir;
    std::optional<double> budget_seconds;
    std::optional<int> checkpoint_index;
    std::size_t chunk = 64;
};

int run_sample(const Globals& g, const SampleFlags& f, std::ostream& out) {
    const auto cfg = make_config(g);
    const std::uint64_t seed = f.seed.value_or(cfg.seed);
    const auto start = std::chrono::steady_clock::now();
    std::optional<std::chrono::steady_clock::time_point> deadline;
    if (f.budget_seconds) {
        deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(*f.budget_seconds));
    }
    fs::create_directories(f.out_dir);
    Stage stage("sample", f.out_dir, g, seed);
    const auto ckpt = nn::load_checkpoint(f.checkpoint);
    const auto sched = diffusion::linear_schedule(static_cast<int>(ckpt.model.arch().timesteps), cfg.beta_start, cfg.beta_end);
    const auto ckpt_index = f.checkpoint_index ? f.checkpoint_index : checkpoint_index_from_name(f.checkpoint);
    const std::string ckpt_digest = sha256_hex(std::span<const unsigned char>(read_file_bytes(f.checkpoint)));

    const fs::path manifest_path = f.out_dir / "manifest.jsonl";
    const fs::path cursor_path = f.out_dir / "sample_cursor.json";
    DatasetManifest m;
    m.seed = seed;
    std::uint64_t next = 0;
    if (fs::exists(cursor_path)) {
        const auto c = jsonl::json::parse(read_text_file(cursor_path));
        if (c.at("seed").get<std::uint64_t>() != seed || c.at("count").get<int>() != f.n ||
            c.at("checkpoint_sha256").get<std::string>() != ckpt_digest) {
            throw std::runtime_error("sample cursor in " + f.out_dir.string() +
                                     " belongs to a different job; use a fresh output directory");
        }
        next = c.at("next_index").get<std::uint64_t>();
        if (fs::exists(manifest_path)) m = imaging::read_manifest(manifest_path);
    }
    const auto write_cursor = [&] {
        jsonl::json c{{"seed", seed}, {"count", f.n}, {"checkpoint_sha256", ckpt_digest}, {"next_index", next}};
        write_text_file(cursor_path, c.dump() + "\n");
    };

    while (next < static_cast<std::uint64_t>(f.n)) {
        if (deadline && std::chrono::steady_clock::now() >= *deadline) break;
        diffusion::SampleRequest req;
        req.count = static_cast<int>(std::min<std::uint64_t>(f.chunk, static_cast<std::uint64_t>(f.n) - next));
        req.size = cfg.image_size;
        req.seed = seed;
        req.first_index = next;
        req.checkpoint_index = ckpt_index;
        req.deadline = deadline;
        const auto images = diffusion::sample(ckpt.model, sched, req);
        for (const auto& img : images) {
            const std::string file = img.meta.source_id + ".png";
            imaging::write_png(img, f.out_dir / file);
            m.entries.push_back(entry_for(img, file));
        }
        next += images.size();
        imaging::write_manifest(m, manifest_path);
        write_cursor();
        if (images.size() < static_cast<std::size_t>(req.count)) break;
    }
    if (next == 0 && !fs::exists(cursor_path)) write_cursor();
    stage.inputs({f.checkpoint});
    stage.outputs(manifest_files(manifest_path, m));
    stage.counts(count_images(m));
    stage.finish();
    if (next < static_cast<std::uint64_t>(f.n)) {
        out << "budget expired after " << next << " of " << f.n << " images; rerun the same command to resume\n";
    } else {
        out << "sampled " << next << " images into " << f.out_dir.string() << "\n";
    }
    return 0;
}

int run_embed(const Globals& g, const fs::path& manifest_path, const fs::path& out_csv, std::optional<std::uint64_t> eseed,
              std::ostream& out) {
    const auto cfg = make_config(g);
    const auto m = imaging::read_manifest(manifest_path);
    const auto entries = m.usable();
    const auto images = load_images(manifest_path, entries);
    const eval::Embedder embedder(eseed.value_or(cfg.embedder_seed), cfg.embed_dim);
    eval::FeatureTable t;
    for (const auto& e : entries) t.ids.push_back(e.source_id);
    t.features = embedder.embed(images);
    if (!out_csv.parent_path().empty()) fs::create_directories(out_csv.parent_path());
    eval::write_features_csv(t, out_csv);
    out << "embedded " << entries.size() << " images (" << cfg.embed_dim << " dims)\n";
    return 0;
}

int run_fid_curve(const Globals& g, const fs::path& real_manifest, const fs::path& ckpt_dir, std::optional<int> n_synth,
                  std::optional<std::uint64_t> seed_opt, const fs::path& out_csv, const std::vector<std::uint64_t>& only,
                  std::ostream& out) {
    const auto cfg = make_config(g);
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    const auto records = diffusion::read_checkpoint_log(ckpt_dir);
    std::vector<eval::CheckpointRef> refs;
    for (const auto& r : records) {
        if (!only.empty() && std::find(only.begin(), only.end(), r.checkpoint_index) == only.end()) continue;
        refs.push_back({r.checkpoint_index, ckpt_dir / r.file.filename()});
    }
    if (refs.empty()) throw std::runtime_error("no checkpoints selected in " + ckpt_dir.string());
    const fs::path work = out_csv.parent_path().empty() ? fs::current_path() : out_csv.parent_path();
    fs::create_directories(work);
    Stage stage("fid-curve", work, g, seed);
    const auto real_m = imaging::read_manifest(real_manifest);
    const auto real_images = load_images(real_manifest, real_m.usable());
    const eval::Embedder embedder(cfg.embedder_seed, cfg.embed_dim);
    const auto first = nn::load_checkpoint(refs.front().file);
    const auto sched = diffusion::linear_schedule(static_cast<int>(first.model.arch().timesteps), cfg.beta_start, cfg.beta_end);
    const auto points = eval::fid_curve(refs, real_images, n_synth.value_or(500), embedder, seed, sched);
    eval::write_fid_csv(points, out_csv);
    std::vector<fs::path> inputs = manifest_files(real_manifest, real_m);
    for (const auto& r : refs) inputs.push_back(r.file);
    stage.inputs(inputs);
    stage.outputs({out_csv});
    stage.count("checkpoints", points.size());
    stage.finish();
    for (const auto& p : points) out << "checkpoint " << p.checkpoint_index << " step " << p.step << " fid " << p.fid << "\n";
    return 0;
}

int run_audit(const Globals& g, const fs::path& real_csv, const fs::path& synth_csv, std::size_t k, const fs::path& pairs_out,
              std::optional<fs::path> bundle_dir, const std::vector<std::string>& manifests, unsigned threads,
              std::ostream& out) {
    const auto cfg = make_config(g);
    const fs::path work = pairs_out.parent_path().empty() ? fs::current_path() : pairs_out.parent_path();
    fs::create_directories(work);
    Stage stage("audit", work, g, cfg.seed);
    const auto real = eval::read_features_csv(real_csv);
    const auto synth = eval::read_features_csv(synth_csv);
    const auto pairs = audit::top_k_pairs(real, synth, k, threads);
    audit::write_pairs(pairs, pairs_out);
    std::vector<fs::path> outputs{pairs_out};
    if (bundle_dir) {
        std::vector<fs::path> mpaths(manifests.begin(), manifests.end());
        const auto entries = audit::build_review_bundle(pairs, mpaths, *bundle_dir);
        outputs.push_back(*bundle_dir / "index.jsonl");
        for (const auto& e : entries) outputs.push_back(*bundle_dir / e.file);
    }
    stage.inputs({real_csv, synth_csv});
    stage.outputs(outputs);
    stage.count("pairs", pairs.size());
    stage.finish();
    if (!pairs.empty()) {
        out << "top pair: " << pairs.front().real_id << " ~ " << pairs.front().synth_id << " cosine "
            << pairs.front().cosine << "\n";
    }
    out << "wrote " << pairs.size() << " pairs\n";
    return 0;
}

std::vector<std::string> usable_ids(const fs::path& manifest_path) {
    std::vector<std::string> ids;
    for (const auto& e : imaging::read_manifest(manifest_path).usable()) ids.push_back(e.source_id);
    return ids;
}

int run_quartets(const Globals& g, const fs::path& real_manifest, const std::vector<std::string>& synth_manifests,
                 std::optional<int> n_opt, std::optional<std::uint64_t> seed_opt, const fs::path& rater_out,
                 const fs::path& key_out, std::ostream& out) {
    const auto cfg = make_config(g);
    if (synth_manifests.size() != 3) throw CLI::ValidationError("--synth", "exactly three synthetic manifests required");
    const int n = n_opt.value_or(cfg.n_quartets);
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);
    const fs::path work = rater_out.parent_path().empty() ? fs::current_path() : rater_out.parent_path();
    fs::create_directories(work);
    Stage stage("quartets", work, g, seed);
    const auto real = usable_ids(real_manifest);
    std::array<std::vector<std::string>, 3> synth;
    for (std::size_t i = 0; i < 3; ++i) synth[i] = usable_ids(synth_manifests[i]);
    const auto quartets = turing::build_quartets(real, synth, n, seed);
    if (!key_out.parent_path().empty()) fs::create_directories(key_out.parent_path());
    turing::write_quartets(quartets, rater_out, key_out);
    std::vector<fs::path> inputs{real_manifest};
    for (const auto& s : synth_manifests) inputs.emplace_back(s);
    stage.inputs(inputs);
    stage.outputs({rater_out, key_out});
    stage.count("quartets", quartets.size());
    stage.finish();
    out << "built " << quartets.size() << " quartets\n";
    return 0;
}

int run_analyze(const Globals& g, const fs::path& responses, const fs::path& rater_file, const fs::path& key_file,
                std::optional<fs::path> out_json, std::optional<fs::path> ratings_out, std::ostream& out) {
    const auto cfg = make_config(g);
    const auto quartets = turing::read_quartets(rater_file, key_file);
    const auto recs = turing::read_responses(responses);
    const auto report = turing::analyze_study(recs, quartets);
    if (report.raters != static_cast<std::size_t>(cfg.raters_expected)) {
        std::cerr << "note: " << report.raters << " raters found, " << cfg.raters_expected << " expected\n";
    }
    const std::string text = turing::report_to_json(report);
    if (out_json) {
        if (!out_json->parent_path().empty()) fs::create_directories(out_json->parent_path());
        write_text_file(*out_json, text);
    } else {
        out << text;
    }
    if (ratings_out) write_text_file(*ratings_out, turing::ratings_csv(report));
    return 0;
}

int run_triage_apply(const Globals& g, const fs::path& manifest_path, const fs::path& verdicts_path,
                     std::optional<fs::path> out_path, bool finalize, std::ostream& out) {
    const fs::path target = out_path.value_or(manifest_path);
    const fs::path work = fs::absolute(target).parent_path();
    Stage stage("triage-apply", work, g, 0);
    const auto before = imaging::read_manifest(manifest_path);
    const auto verdicts = read_image_verdicts(verdicts_path);
    const auto after = triage_apply(before, verdicts, finalize);
    imaging::write_manifest(after, target);
    const auto counts = count_images(after);
    stage.inputs({manifest_path, verdicts_path});
    stage.outputs({target});
    stage.counts(counts);
    stage.finish();
    out << "generated " << counts.generated << ", accepted " << counts.accepted << ", rejected " << counts.rejected
        << ", pending " << counts.pending << "\n";
    return 0;
}

std::atomic<study::HttpServer*> g_server{nullptr};

extern "C" void stop_server(int) {
    if (auto* s = g_server.load()) s->stop();
}

struct ServeFlags {
    fs::path quartets;
    std::vector<std::string> manifests;
    fs::path state_dir;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<fs::path> bundle;
    std::optional<fs::path> triage_manifest;
    std::optional<fs::path> static_dir;
    std::optional<std::uint64_t> seed;
};

int run_serve(const Globals& g, const ServeFlags& f, std::ostream& out) {
    const auto cfg = make_config(g);
    study::ServiceConfig sc;
    sc.quartet_file = f.quartets;
    sc.manifests.assign(f.manifests.begin(), f.manifests.end());
    sc.state_dir = f.state_dir;
    sc.bundle_dir = f.bundle;
    sc.triage_manifest = f.triage_manifest;
    sc.seed = f.seed.value_or(cfg.seed);
    StageLock lock(f.state_dir);
    study::StudyService service(sc);
    study::HttpServer server(service, f.static_dir);
    const int port = server.start(f.host, f.port);
    out << "serving on http://" << f.host << ":" << port << "\n" << std::flush;
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    server.wait();
    g_server = nullptr;
    return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"radsynth: diffusion training, evaluation and blinded reader-study pipeline", "radsynth"};
    app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");
    app.fallthrough();  // set before add_subcommand so subcommands inherit it
    Globals g;
    app.add_option("--config", g.config_file, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--set", g.sets, "override a config key (section.key=value), repeatable");
    app.add_option("--ledger", g.ledger, "run ledger path (default: <stage dir>/run_ledger.jsonl)");

    std::function<int()> action;

    // phantom-gen
    auto* pg = app.add_subcommand("phantom-gen", "generate procedural phantom radiographs");
    int pg_n = 0;
    int pg_size = 16;
    std::optional<std::uint64_t> pg_seed;
    std::string pg_out;
    pg->add_option("--n", pg_n, "number of images")->required()->check(CLI::PositiveNumber);
    pg->add_option("--size", pg_size, "image side in pixels")->check(CLI::Range(8, 4096));
    pg->add_option("--seed", pg_seed, "seed (default: global.seed)");
    pg->add_option("--out", pg_out, "output directory")->required();
    pg->callback([&] { action = [&] { return run_phantom_gen(g, pg_n, pg_size, pg_seed, pg_out, out); }; });

    // preprocess
    auto* pp = app.add_subcommand("preprocess", "invert negatives, resample and orient images");
    std::string pp_in;
    std::string pp_out;
    std::optional<int> pp_size;
    bool pp_auto = false;
    pp->add_option("--manifest", pp_in, "input manifest")->required()->check(CLI::ExistingFile);
    pp->add_option("--out", pp_out, "output directory")->required();
    pp->add_option("--size", pp_size, "target side (default: data.image_size)")->check(CLI::Range(8, 4096));
    pp->add_flag("--detect-negative", pp_auto, "apply the negative-scan heuristic where the manifest has no flag");
    pp->callback([&] { action = [&] { return run_preprocess(g, pp_in, pp_out, pp_size, pp_auto, out); }; });

    // split
    auto* sp = app.add_subcommand("split", "seeded train/validation split");
    std::string sp_in;
    std::string sp_out;
    std::optional<double> sp_frac;
    std::optional<std::uint64_t> sp_seed;
    sp->add_option("--manifest", sp_in, "input manifest")->required()->check(CLI::ExistingFile);
    sp->add_option("--out", sp_out, "output directory")->required();
    sp->add_option("--val-fraction", sp_frac, "validation fraction (default: diffusion.val_fraction)")->check(CLI::Range(0.0, 1.0));
    sp->add_option("--seed", sp_seed, "seed (default: global.seed)");
    sp->callback([&] { action = [&] { return run_split(g, sp_in, sp_out, sp_frac, sp_seed, out); }; });

    // train
    auto* tr = app.add_subcommand("train", "train the denoiser");
    TrainFlags tf;
    std::string tr_train;
    std::optional<std::string> tr_val;
    std::optional<std::string> tr_out;
    tr->add_option("--train", tr_train, "training manifest")->required()->check(CLI::ExistingFile);
    tr->add_option("--val", tr_val, "validation manifest")->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "checkpoint directory (default: paths.checkpoint_dir)");
    tr->add_option("--steps", tf.steps, "optimizer steps");
    tr->add_option("--checkpoint-interval", tf.interval, "steps between checkpoints");
    tr->add_option("--batch", tf.batch, "batch size");
    tr->add_option("--timesteps", tf.timesteps, "diffusion steps T");
    tr->add_option("--lr", tf.lr, "Adam learning rate");
    tr->add_option("--seed", tf.seed, "seed (default: global.seed)");
    tr->callback([&] {
        action = [&] {
            tf.train_manifest = tr_train;
            if (tr_val) tf.val_manifest = *tr_val;
            if (tr_out) tf.out_dir = *tr_out;
            return run_train(g, tf, out);
        };
    });

    // sample
    auto* sa = app.add_subcommand("sample", "ancestral sampling from a checkpoint (resumable)");
    SampleFlags sf;
    std::string sa_ckpt;
    std::string sa_out;
    sa->add_option("--checkpoint", sa_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    sa->add_option("--n", sf.n, "number of images")->required()->check(CLI::PositiveNumber);
    sa->add_option("--seed", sf.seed, "seed (default: global.seed)");
    sa->add_option("--out", sa_out, "output directory")->required();
    sa->add_option("--budget-seconds", sf.budget_seconds, "wall-clock budget; on expiry the job stops cleanly")
        ->check(CLI::NonNegativeNumber);
    sa->add_option("--checkpoint-index", sf.checkpoint_index, "checkpoint index recorded in the manifest");
    sa->add_option("--chunk", sf.chunk, "images persisted per chunk")->check(CLI::PositiveNumber);
    sa->callback([&] {
        action = [&] {
            sf.checkpoint = sa_ckpt;
            sf.out_dir = sa_out;
            return run_sample(g, sf, out);
        };
    });

    // embed
    auto* em = app.add_subcommand("embed", "write embedder features for a manifest");
    std::string em_in;
    std::string em_out;
    std::optional<std::uint64_t> em_seed;
    em->add_option("--manifest", em_in, "manifest")->required()->check(CLI::ExistingFile);
    em->add_option("--out", em_out, "features CSV")->required();
    em->add_option("--embed-seed", em_seed, "embedder seed (default: embedder.seed)");
    em->callback([&] { action = [&] { return run_embed(g, em_in, em_out, em_seed, out); }; });

    // fid-curve
    auto* fc = app.add_subcommand("fid-curve", "Frechet distance per checkpoint");
    std::string fc_real;
    std::string fc_ckpts;
    std::string fc_out;
    std::optional<int> fc_n;
    std::optional<std::uint64_t> fc_seed;
    std::vector<std::uint64_t> fc_only;
    fc->add_option("--real", fc_real, "real image manifest")->required()->check(CLI::ExistingFile);
    fc->add_option("--checkpoints", fc_ckpts, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
    fc->add_option("--n-synth", fc_n, "synthetic images per checkpoint (default 500)")->check(CLI::Range(2, 1000000));
    fc->add_option("--seed", fc_seed, "sampling seed (default: global.seed)");
    fc->add_option("--only", fc_only, "restrict to these checkpoint indices");
    fc->add_option("--out", fc_out, "output CSV")->required();
    fc->callback([&] { action = [&] { return run_fid_curve(g, fc_real, fc_ckpts, fc_n, fc_seed, fc_out, fc_only, out); }; });

    // audit
    auto* au = app.add_subcommand("audit", "nearest-neighbour memorization screen");
    std::string au_real;
    std::string au_synth;
    std::string au_out;
    std::size_t au_k = 100;
    std::optional<std::string> au_bundle;
    std::vector<std::string> au_manifests;
    unsigned au_threads = 1;
    au->add_option("--real", au_real, "real features CSV")->required()->check(CLI::ExistingFile);
    au->add_option("--synth", au_synth, "synthetic features CSV")->required()->check(CLI::ExistingFile);
    au->add_option("--k", au_k, "pairs to keep")->check(CLI::PositiveNumber);
    au->add_option("--out", au_out, "pairs JSONL")->required();
    au->add_option("--bundle", au_bundle, "write a review bundle to this directory");
    au->add_option("--manifest", au_manifests, "manifests resolving image ids for the bundle")->check(CLI::ExistingFile);
    au->add_option("--threads", au_threads, "search threads")->check(CLI::PositiveNumber);
    au->callback([&] {
        action = [&] {
            std::optional<fs::path> bundle;
            if (au_bundle) {
                if (au_manifests.empty()) throw CLI::ValidationError("--manifest", "required with --bundle");
                bundle = *au_bundle;
            }
            return run_audit(g, au_real, au_synth, au_k, au_out, bundle, au_manifests, au_threads, out);
        };
    });

    // quartets
    auto* qu = app.add_subcommand("quartets", "assemble blinded quartets");
    std::string qu_real;
    std::vector<std::string> qu_synth;
    std::optional<int> qu_n;
    std::optional<std::uint64_t> qu_seed;
    std::string qu_out;
    std::string qu_key;
    qu->add_option("--real", qu_real, "real manifest")->required()->check(CLI::ExistingFile);
    qu->add_option("--synth", qu_synth, "synthetic manifest, given three times in checkpoint order")
        ->required()
        ->check(CLI::ExistingFile);
    qu->add_option("--n", qu_n, "quartet count (default: study.n_quartets)")->check(CLI::PositiveNumber);
    qu->add_option("--seed", qu_seed, "seed (default: global.seed)");
    qu->add_option("--out", qu_out, "rater-facing quartet file")->required();
    qu->add_option("--key", qu_key, "answer key file")->required();
    qu->callback([&] { action = [&] { return run_quartets(g, qu_real, qu_synth, qu_n, qu_seed, qu_out, qu_key, out); }; });

    // serve
    auto* sv = app.add_subcommand("serve", "run the reader-study HTTP service");
    ServeFlags svf;
    std::string sv_q;
    std::string sv_state;
    std::optional<std::string> sv_bundle;
    std::optional<std::string> sv_triage;
    std::optional<std::string> sv_static;
    sv->add_option("--quartets", sv_q, "rater-facing quartet file")->required()->check(CLI::ExistingFile);
    sv->add_option("--manifest", svf.manifests, "manifests resolving image ids")->required()->check(CLI::ExistingFile);
    sv->add_option("--state", sv_state, "directory for append-only logs")->required();
    sv->add_option("--host", svf.host, "bind address");
    sv->add_option("--port", svf.port, "port (0 picks a free one)")->check(CLI::Range(0, 65535));
    sv->add_option("--bundle", sv_bundle, "review bundle directory for pair triage")->check(CLI::ExistingDirectory);
    sv->add_option("--triage-manifest", sv_triage, "images for accept/reject triage")->check(CLI::ExistingFile);
    sv->add_option("--static", sv_static, "directory served at /")->check(CLI::ExistingDirectory);
    sv->add_option("--seed", svf.seed, "session seed (default: global.seed)");
    sv->callback([&] {
        action = [&] {
            svf.quartets = sv_q;
            svf.state_dir = sv_state;
            if (sv_bundle) svf.bundle = *sv_bundle;
            if (sv_triage) svf.triage_manifest = *sv_triage;
            if (sv_static) svf.static_dir = *sv_static;
            return run_serve(g, svf, out);
        };
    });

    // analyze
    auto* an = app.add_subcommand("analyze", "accuracy, agreement and paired tests");
    std::string an_resp;
    std::string an_q;
    std::string an_key;
    std::optional<std::string> an_out;
    std::optional<std::string> an_csv;
    an->add_option("--responses", an_resp, "responses JSONL")->required()->check(CLI::ExistingFile);
    an->add_option("--quartets", an_q, "rater-facing quartet file")->required()->check(CLI::ExistingFile);
    an->add_option("--key", an_key, "answer key file")->required()->check(CLI::ExistingFile);
    an->add_option("--out", an_out, "report JSON (default: stdout)");
    an->add_option("--ratings-csv", an_csv, "rating distribution CSV");
    an->callback([&] {
        action = [&] {
            std::optional<fs::path> o;
            std::optional<fs::path> c;
            if (an_out) o = *an_out;
            if (an_csv) c = *an_csv;
            return run_analyze(g, an_resp, an_q, an_key, o, c, out);
        };
    });

    // triage-apply
    auto* ta = app.add_subcommand("triage-apply", "apply accept/reject verdicts to a manifest");
    std::string ta_m;
    std::string ta_v;
    std::optional<std::string> ta_out;
    bool ta_final = false;
    ta->add_option("--manifest", ta_m, "manifest to update")->required()->check(CLI::ExistingFile);
    ta->add_option("--verdicts", ta_v, "image verdicts JSONL")->required()->check(CLI::ExistingFile);
    ta->add_option("--out", ta_out, "write here instead of in place");
    ta->add_flag("--finalize", ta_final, "accept every entry still pending");
    ta->callback([&] {
        action = [&] {
            std::optional<fs::path> o;
            if (ta_out) o = *ta_out;
            return run_triage_apply(g, ta_m, ta_v, o, ta_final, out);
        };
    });

    app.require_subcommand(1, 1);

    if (args.empty()) {
        err << app.help();
        return 2;
    }
    // First word that is not a global option (or its value) must name a subcommand.
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        if (a == "--config" || a == "--set" || a == "--ledger") {
            ++i;
            continue;
        }
        if (!a.empty() && a.front() == '-') continue;
        if (!app.get_subcommand_no_throw(a)) {
            err << "error: unknown subcommand '" << a << "'\n\n" << app.help();
            return 2;
        }
        break;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    try {
        return action ? action() : 2;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace radsynth::pipeline
