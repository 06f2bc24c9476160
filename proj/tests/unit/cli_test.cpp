#include "doctest.h"

#include "tcpshare/cli.hpp"
#include "tcpshare/trace_store.hpp"

#include <filesystem>
#include <random>
#include <sstream>

using namespace tcpshare;
using namespace tcpshare::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("tcpshare-cli-" + name + "-" + std::to_string(std::random_device{}()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("flow lists")
{
    const auto v = parse_flow_list("2xreno,1xcubic");
    REQUIRE(v.size() == 2);
    CHECK(v[0] == std::pair{2, Flavor::Reno});
    CHECK(v[1] == std::pair{1, Flavor::Cubic});
    CHECK(parse_flow_list("cubic").front() == std::pair{1, Flavor::Cubic});
    CHECK_THROWS_AS(parse_flow_list("0xreno"), std::invalid_argument);
    CHECK_THROWS_AS(parse_flow_list("2xvegas"), std::invalid_argument);
    CHECK_THROWS_AS(parse_flow_list(""), std::invalid_argument);
}

TEST_CASE("solve writes its outputs")
{
    SolveOptions opt;
    opt.p_loss = 1.1e-4;
    opt.out_dir = scratch("solve");
    const SolveResult r = solve(opt);
    CHECK(r.cwnd_max_auto);
    CHECK(r.spec.cwnd_max == 1024);
    CHECK(fs::exists(r.pmf_csv));
    CHECK(fs::exists(r.summary_json));
    CHECK(r.rate.q50 / 1e6 == doctest::Approx(10.0).epsilon(0.05));
    CHECK(solve(opt).id == r.id);

    SolveOptions bad = opt;
    bad.p_loss = 1.5;
    CHECK_THROWS(solve(bad));
    fs::remove_all(opt.out_dir);
}

TEST_CASE("simulate then analyze")
{
    const fs::path dir = scratch("sim");
    std::ostringstream log;
    const ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1e-3, 0.1, 900, 7);
    CHECK(cmd_simulate({cfg, dir}, log) == kOk);
    const std::string id = compute_run_id(cfg);
    CHECK(fs::exists(dir / (id + ".trace.csv")));

    AnalyzeOptions an;
    an.trace = dir / id;
    an.out_dir = dir;
    an.intervals_s = {1, 4, 16};
    CHECK(cmd_analyze(an, log) == kOk);
    for (const char* ext : {".histogram.csv", ".stddev.csv", ".rate.csv", ".summary.json"}) {
        CHECK(fs::exists(dir / (id + ext)));
    }

    an.intervals_s = {1.5};
    CHECK_THROWS_AS(cmd_analyze(an, log), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("analyze refuses traces without usable intervals")
{
    const fs::path dir = scratch("short");
    std::ostringstream log;
    const ScenarioConfig cfg = make_random_drop(Flavor::Reno, 1e-3, 0.1, 300, 7);
    cmd_simulate({cfg, dir}, log);
    AnalyzeOptions an;
    an.trace = dir / compute_run_id(cfg);
    an.out_dir = dir;
    CHECK_THROWS_AS(cmd_analyze(an, log), InsufficientData);
    fs::remove_all(dir);
}

TEST_CASE("output directory resolution")
{
    CHECK(output_dir(fs::path("given")) == fs::path("given"));
    ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
    CHECK(output_dir(std::nullopt) == fs::path("/tmp/from-env"));
    ::unsetenv(kOutputDirEnv);
    CHECK(output_dir(std::nullopt) == fs::path("tcpshare-out"));
}

TEST_CASE("reproduce rejects unknown targets")
{
    std::ostringstream log;
    ReproduceOptions opt;
    opt.target = "fig99";
    opt.out_dir = scratch("rep");
    CHECK_THROWS_AS(cmd_reproduce(opt, log), std::invalid_argument);
    CHECK(reproduce_targets().size() == 9);
}

TEST_CASE("verify runs a selected check")
{
    VerifyOptions opt;
    opt.only = {4};
    std::ostringstream log;
    const auto results = run_acceptance(opt, log);
    REQUIRE(results.size() == 1);
    CHECK(results[0].id == 4);
    CHECK(results[0].passed);
    CHECK(format_check(results[0]).rfind("[PASS]", 0) == 0);
    CHECK_FALSE(is_quick_check(9));
    CHECK(is_quick_check(1));
    opt.only = {42};
    CHECK_THROWS_AS(run_acceptance(opt, log), std::invalid_argument);
}
