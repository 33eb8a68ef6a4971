#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "radsynth/common/digest.hpp"
#include "radsynth/imaging/manifest.hpp"
#include "radsynth/pipeline/cli.hpp"
#include "radsynth/pipeline/config.hpp"
#include "radsynth/pipeline/ledger.hpp"
#include "radsynth/pipeline/triage.hpp"
#include "radsynth/turingstats/quartet.hpp"
#include "radsynth/turingstats/report.hpp"
#include "temp_dir.hpp"

using namespace radsynth;
using namespace radsynth::pipeline;
using imaging::TriageStatus;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

EnvLookup no_env() {
    return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

imaging::DatasetManifest pending_manifest(int n) {
    imaging::DatasetManifest m;
    m.seed = 3;
    for (int i = 0; i < n; ++i) {
        imaging::ManifestEntry e;
        e.source_id = "s" + std::to_string(i);
        e.path = e.source_id + ".png";
        e.origin = imaging::Origin::Synthetic;
        e.checkpoint = 34;
        m.entries.push_back(e);
    }
    return m;
}

}  // namespace

TEST(Config, PrecedenceDefaultsFileEnvOverrides) {
    oracle::TempDir dir;
    const auto file = parse_config_text("# comment\n[diffusion]\nlr = 1e-3\nbatch_size=4\nglobal.seed = 9\n");
    EXPECT_EQ(file.at("diffusion.lr"), "1e-3");
    EXPECT_EQ(file.at("global.seed"), "9");

    auto c = resolve_config({}, no_env(), {}, dir.path());
    EXPECT_EQ(c.train.lr, 5e-5);
    EXPECT_EQ(c.n_quartets, 50);
    EXPECT_EQ(c.raters_expected, 8);

    c = resolve_config(file, no_env(), {}, dir.path());
    EXPECT_EQ(c.train.lr, 1e-3);
    EXPECT_EQ(c.train.batch_size, 4u);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.train.seed, 9u);

    EnvLookup env = [](const std::string& name) -> std::optional<std::string> {
        if (name == "RADSYNTH_DIFFUSION_LR") return "2e-3";
        return std::nullopt;
    };
    c = resolve_config(file, env, {}, dir.path());
    EXPECT_EQ(c.train.lr, 2e-3);
    c = resolve_config(file, env, {{"diffusion.lr", "3e-3"}}, dir.path());
    EXPECT_EQ(c.train.lr, 3e-3);
    EXPECT_EQ(env_name("diffusion.lr"), "RADSYNTH_DIFFUSION_LR");
}

TEST(Config, RejectsUnknownAndMalformed) {
    oracle::TempDir dir;
    EXPECT_THROW(resolve_config({{"diffusion.nope", "1"}}, no_env(), {}, dir.path()), std::invalid_argument);
    EXPECT_THROW(resolve_config({{"diffusion.lr", "fast"}}, no_env(), {}, dir.path()), std::invalid_argument);
    EXPECT_THROW(resolve_config({{"diffusion.batch_size", "0"}}, no_env(), {}, dir.path()), std::invalid_argument);
}

TEST(Config, PathsResolveAndTextRoundTrips) {
    oracle::TempDir dir;
    const auto c = resolve_config({{"paths.data_dir", "d"}}, no_env(), {}, dir.path());
    EXPECT_TRUE(c.data_dir.is_absolute());
    EXPECT_EQ(c.data_dir.filename(), "d");
    const auto again = resolve_config(parse_config_text(to_config_text(c)), no_env(), {}, dir.path());
    EXPECT_EQ(to_config_text(again), to_config_text(c));
    EXPECT_EQ(config_keys().size(), parse_config_text(to_config_text(c)).size());
}

TEST(Triage, PaperRowShape) {
    const auto m = pending_manifest(1000);
    std::vector<ImageVerdict> v;
    for (int i = 0; i < 393; ++i) v.push_back({"s" + std::to_string(i * 2), true, "implausible anatomy", "rev"});
    const auto out = triage_apply(m, v, true);
    const auto c = count_images(out);
    EXPECT_EQ(c.generated, 1000u);
    EXPECT_EQ(c.accepted, 607u);
    EXPECT_EQ(c.rejected, 393u);
    EXPECT_TRUE(c.reconciles());
    EXPECT_EQ(out.usable().size(), 607u);
}

TEST(Triage, ZeroVerdictsLeaveManifestUnchanged) {
    const auto m = pending_manifest(5);
    EXPECT_EQ(triage_apply(m, {}), m);
}

TEST(Triage, UnknownIdOrMissingReasonIsAtomic) {
    const auto m = pending_manifest(5);
    const auto copy = m;
    std::vector<ImageVerdict> v{{"s1", true, "bad", "r"}, {"ghost", true, "bad", "r"}};
    EXPECT_THROW(triage_apply(m, v), std::invalid_argument);
    EXPECT_EQ(m, copy);
    std::vector<ImageVerdict> w{{"s1", true, "", "r"}};
    EXPECT_THROW(triage_apply(m, w), std::invalid_argument);
}

TEST(Triage, LaterVerdictWins) {
    const auto m = pending_manifest(2);
    std::vector<ImageVerdict> v{{"s0", true, "bad", "r"}, {"s0", false, "", "r"}};
    const auto out = triage_apply(m, v);
    EXPECT_EQ(out.entries[0].triage_status, TriageStatus::Accepted);
    EXPECT_EQ(out.entries[1].triage_status, TriageStatus::Pending);
}

TEST(Ledger, AppendsAndRejectsUnreconciledCounts) {
    oracle::TempDir dir;
    RunLedger ledger(dir / "l.jsonl");
    StageRecord r{"triage", "a", "b", 1, utc_now_iso(), utc_now_iso(), {{"generated", 10}, {"accepted", 6}, {"rejected", 4}}};
    ledger.append(r);
    const auto before = read_text_file(ledger.path());
    r.counts["accepted"] = 5;
    EXPECT_THROW(ledger.append(r), std::logic_error);
    EXPECT_EQ(read_text_file(ledger.path()), before);
    const auto recs = ledger.records();
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].counts.at("rejected"), 4u);
}

TEST(Ledger, StageLockIsExclusive) {
    oracle::TempDir dir;
    {
        StageLock lock(dir.path());
        EXPECT_THROW(StageLock second(dir.path()), std::runtime_error);
    }
    StageLock again(dir.path());
}

TEST(Cli, NoArgumentsIsUsageError) {
    const auto r = run({});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("phantom-gen"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndBadFlags) {
    auto r = run({"frobnicate"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("unknown subcommand"), std::string::npos);
    r = run({"phantom-gen", "--n", "-3", "--out", "x"});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, PhantomGenCardinalityAndDeterminism) {
    oracle::TempDir dir;
    ASSERT_EQ(run({"phantom-gen", "--n", "100", "--size", "16", "--seed", "1", "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(run({"phantom-gen", "--n", "100", "--size", "16", "--seed", "1", "--out", (dir / "b").string()}).code, 0);
    const auto m = imaging::read_manifest(dir / "a" / "manifest.jsonl");
    EXPECT_EQ(m.entries.size(), 100u);
    int pngs = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir / "a")) pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 100);
    EXPECT_EQ(read_file_bytes(dir / "a" / "manifest.jsonl"), read_file_bytes(dir / "b" / "manifest.jsonl"));
    EXPECT_EQ(read_file_bytes(dir / "a" / m.entries[42].path), read_file_bytes(dir / "b" / m.entries[42].path));
    const auto recs = RunLedger(dir / "a" / "run_ledger.jsonl").records();
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].stage, "phantom-gen");
    EXPECT_EQ(recs[0].seed, 1u);
}

TEST(Cli, GlobalOptionsAfterSubcommand) {
    oracle::TempDir dir;
    const auto r = run({"phantom-gen", "--n", "3", "--out", (dir / "p").string(), "--set", "global.seed=5",
                        "--ledger", (dir / "ledger.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto recs = RunLedger(dir / "ledger.jsonl").records();
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].seed, 5u);
}

TEST(Cli, AnalyzeReportShape) {
    oracle::TempDir dir;
    std::vector<std::string> real, a, b, c;
    for (int i = 0; i < 10; ++i) {
        real.push_back("r" + std::to_string(i));
        a.push_back("a" + std::to_string(i));
        b.push_back("b" + std::to_string(i));
        c.push_back("c" + std::to_string(i));
    }
    const auto qs = turing::build_quartets(real, {a, b, c}, 10, 1);
    turing::write_quartets(qs, dir / "q.jsonl", dir / "k.jsonl");
    const auto rs = turing::simulate_raters(qs, 8, turing::RaterModel::Uniform, 2);
    turing::write_responses(rs, dir / "r.jsonl");
    const auto r = run({"analyze", "--responses", (dir / "r.jsonl").string(), "--quartets", (dir / "q.jsonl").string(),
                        "--key", (dir / "k.jsonl").string(), "--ratings-csv", (dir / "ratings.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j.at("accuracy").is_number());
    EXPECT_TRUE(j.contains("kappa"));
    ASSERT_EQ(j.at("tests").size(), 3u);
    EXPECT_TRUE(j.at("tests")[0].contains("p_holm"));
    EXPECT_EQ(read_text_file(dir / "ratings.csv").rfind("group,rating,count\n", 0), 0u);
}

TEST(Cli, TriageApplyReconciles) {
    oracle::TempDir dir;
    imaging::write_manifest(pending_manifest(10), dir / "m.jsonl");
    std::vector<ImageVerdict> v{{"s1", true, "implausible anatomy", "r"}, {"s2", true, "artifact", "r"}};
    write_image_verdicts(v, dir / "v.jsonl");
    const auto before = read_text_file(dir / "m.jsonl");
    auto r = run({"triage-apply", "--manifest", (dir / "m.jsonl").string(), "--verdicts", (dir / "v.jsonl").string(),
                  "--out", (dir / "out.jsonl").string(), "--finalize"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(read_text_file(dir / "m.jsonl"), before);
    const auto c = count_images(imaging::read_manifest(dir / "out.jsonl"));
    EXPECT_EQ(c, (ImageCounts{10, 8, 2, 0}));
    const auto recs = RunLedger(dir / "run_ledger.jsonl").records();
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].counts.at("accepted"), 8u);

    write_image_verdicts(std::vector<ImageVerdict>{{"ghost", true, "x", "r"}}, dir / "bad.jsonl");
    r = run({"triage-apply", "--manifest", (dir / "m.jsonl").string(), "--verdicts", (dir / "bad.jsonl").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(read_text_file(dir / "m.jsonl"), before);
}
