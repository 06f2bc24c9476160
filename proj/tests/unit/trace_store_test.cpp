#include "doctest.h"

#include "tcpshare/sim.hpp"
#include "tcpshare/trace_store.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace tcpshare;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("tcpshare-test-" + name + "-" + std::to_string(std::random_device{}()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RateTrace small_run()
{
    return run_shared_bottleneck(make_shared(2, Flavor::Reno, 20e6, 0.1, 60, 7));
}

} // namespace

TEST_CASE("content ids")
{
    CHECK(content_id("abc") == "ba7816bf8f01cfea");
    CHECK(content_id("abc").size() == 16);
    const ScenarioConfig a = make_shared(2, Flavor::Reno, 20e6, 0.1, 60, 7);
    ScenarioConfig b = a;
    b.seed = 8;
    CHECK(compute_run_id(a) == compute_run_id(a));
    CHECK(compute_run_id(a) != compute_run_id(b));
    CHECK(compute_run_id(a) != compute_run_id(a, "other engine"));
}

TEST_CASE("round trip")
{
    const fs::path dir = scratch("rt");
    const RateTrace t = small_run();
    const RunRecord rec = write_trace(t, dir);
    CHECK(fs::exists(rec.trace_csv));
    CHECK(fs::exists(rec.meta_json));
    CHECK(rec.trace_csv.filename() == rec.run_id + ".trace.csv");
    CHECK(read_trace(rec.trace_csv) == t);
    CHECK(read_trace(rec.meta_json) == t);
    CHECK(read_trace(dir / rec.run_id) == t);
    CHECK(slurp(rec.trace_csv).rfind("t_end_s,flow_id,bytes\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("empty trace")
{
    const fs::path dir = scratch("empty");
    RateTrace t;
    t.config = make_shared(1, Flavor::Reno, 10e6, 0.1, 0.5, 1);
    t.bytes.assign(1, {});
    t.counters.assign(1, FlowCounters{});
    const RunRecord rec = write_trace(t, dir);
    CHECK(read_trace(rec.trace_csv) == t);
    fs::remove_all(dir);
}

TEST_CASE("damaged files are reported")
{
    const fs::path dir = scratch("bad");
    const RunRecord rec = write_trace(small_run(), dir);
    const std::string csv = slurp(rec.trace_csv);

    SUBCASE("missing metadata")
    {
        fs::remove(rec.meta_json);
        CHECK_THROWS_WITH_AS(read_trace(rec.trace_csv), doctest::Contains("metadata file not found"), TraceIoError);
    }
    SUBCASE("truncated")
    {
        std::ofstream(rec.trace_csv) << csv.substr(0, csv.rfind('\n', csv.size() / 2) + 1);
        CHECK_THROWS_WITH_AS(read_trace(rec.trace_csv), doctest::Contains("truncated"), TraceIoError);
    }
    SUBCASE("malformed field")
    {
        std::string broken = csv;
        broken.replace(broken.find('\n') + 1, 1, "x");
        std::ofstream(rec.trace_csv) << broken;
        CHECK_THROWS_WITH_AS(read_trace(rec.trace_csv), doctest::Contains(":2:"), TraceIoError);
    }
    SUBCASE("wrong header")
    {
        std::ofstream(rec.trace_csv) << "time,flow,bytes\n" << csv.substr(csv.find('\n') + 1);
        CHECK_THROWS_AS(read_trace(rec.trace_csv), TraceIoError);
    }
    SUBCASE("missing trace")
    {
        CHECK_THROWS_AS(read_trace(dir / "0000000000000000"), TraceIoError);
    }
    fs::remove_all(dir);
}

TEST_CASE("engine version mismatch is a warning")
{
    const fs::path dir = scratch("ver");
    RateTrace t = small_run();
    t.engine_version = "tcpshare-sim 0.9";
    const RunRecord rec = write_trace(t, dir);
    std::vector<std::string> warnings;
    const RateTrace back = read_trace(rec.trace_csv, &warnings);
    CHECK(back.bytes == t.bytes);
    CHECK(warnings.size() == 1);
    fs::remove_all(dir);
}
