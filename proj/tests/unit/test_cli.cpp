#include <doctest.h>

#include <accelhr/evalx.hpp>
#include <accelhr/synth.hpp>

#include <fstream>

#include "../support/fixtures.hpp"
#include "../support/process.hpp"

using namespace accelhr;
using fixtures::slurp;

namespace {

// One small dataset shared by the whole file.
const fixtures::TempDir& dataset() {
    static const fixtures::TempDir dir("cli-data");
    static const bool made = [] {
        const auto r = proc::run({"synth", "--minutes-per-phase", "120", "-o", (dir / "ds").string()}, dir.path());
        return r.code == 0;
    }();
    REQUIRE(made);
    return dir;
}

std::string manifest() { return (dataset() / "ds/manifest.json").string(); }

}  // namespace

TEST_CASE("help lists subcommands and defaults") {
    fixtures::TempDir tmp("cli-help");
    const auto top = proc::run({"--help"}, tmp.path());
    CHECK(top.code == 0);
    for (const char* sub : {"synth", "extract", "offline", "ppaw", "sweep-o", "gateway", "wearable", "report"}) {
        CHECK_MESSAGE(top.out.find(sub) != std::string::npos, sub);
    }
    const auto ppaw = proc::run({"ppaw", "--help"}, tmp.path());
    CHECK(ppaw.code == 0);
    CHECK(ppaw.out.find("--O FLOAT [3]") != std::string::npos);
    CHECK(ppaw.out.find("--TTL INT [10]") != std::string::npos);
    CHECK(ppaw.out.find("--N UINT [5]") != std::string::npos);
    const auto synth = proc::run({"synth", "--help"}, tmp.path());
    CHECK(synth.out.find("[1440]") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    fixtures::TempDir tmp("cli-usage");
    auto r = proc::run({}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: usage: ", 0) == 0);

    r = proc::run({"frobnicate"}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: usage: ", 0) == 0);

    r = proc::run({"offline", "--data", manifest(), "--mode", "sideways"}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: usage: ", 0) == 0);

    r = proc::run({"extract", "--data", manifest(), "--accel", "a.csv", "--hr", "h.csv"}, tmp.path());
    CHECK(r.code == 1);
}

TEST_CASE("configuration errors exit 1 with the category") {
    fixtures::TempDir tmp("cli-config");
    auto r = proc::run({"synth", "--phases", "0", "-o", (tmp / "x").string()}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: config: ", 0) == 0);

    r = proc::run({"ppaw", "--data", manifest(), "--N", "1"}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: config: ", 0) == 0);

    r = proc::run({"sweep-o", "--data", manifest(), "--O", "1,-2"}, tmp.path());
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: config: ", 0) == 0);
}

TEST_CASE("data errors exit 2 with the category") {
    fixtures::TempDir tmp("cli-data-err");
    auto r = proc::run({"ppaw", "--data", (tmp / "missing.csv").string()}, tmp.path());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: io: ", 0) == 0);

    {
        std::ofstream bad(tmp / "bad.csv");
        bad << "minute_index,phase,bpm\n1,0,70\n";
    }
    r = proc::run({"ppaw", "--data", (tmp / "bad.csv").string()}, tmp.path());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: parse: ", 0) == 0);

    {
        std::ofstream acc(tmp / "acc.csv");
        acc << "t_ms,x,y,z\n10,0,0,1\n5,0,0,1\n";
        std::ofstream hr(tmp / "hr.csv");
        hr << "minute_index,bpm\n0,60\n";
    }
    r = proc::run({"extract", "--accel", (tmp / "acc.csv").string(), "--hr", (tmp / "hr.csv").string()}, tmp.path());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: ordering: ", 0) == 0);
    CHECK(r.err.find("line 3") != std::string::npos);

    r = proc::run({"wearable", "--port", "1", "--data", manifest(), "--timeout", "2"}, tmp.path());
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("ppaw subcommand matches the library") {
    fixtures::TempDir tmp("cli-ppaw");
    const auto r = proc::run({"ppaw", "--data", manifest(), "-o", (tmp / "out").string()}, tmp.path());
    REQUIRE(r.code == 0);
    const auto recs = load_minutes(read_manifest(manifest()));
    const auto e = run_ppaw_experiment(recs, PpawConfig{});
    CHECK(slurp(tmp / "out/report.json") == report_to_json(e.report));
    std::ostringstream trace;
    write_trace_csv(trace, e.bootstrap, e.steps);
    CHECK(slurp(tmp / "out/trace.csv") == trace.str());

    // report rebuilds plot.csv from the trace
    const auto rep = proc::run({"report", "--trace", (tmp / "out/trace.csv").string(), "--data", manifest()}, tmp.path());
    REQUIRE(rep.code == 0);
    CHECK(rep.out == slurp(tmp / "out/plot.csv"));
}

TEST_CASE("extract reads either a manifest or raw CSVs") {
    fixtures::TempDir tmp("cli-extract");
    const auto a = proc::run({"extract", "--data", manifest()}, tmp.path());
    const auto ds = dataset() / "ds";
    const auto b = proc::run({"extract", "--accel", (ds / "accel.csv").string(), "--hr", (ds / "hr.csv").string()},
                             tmp.path());
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out.size() == b.out.size());  // same minutes, phases differ only in the labels
    std::istringstream in(a.out);
    CHECK(parse_feature_csv(in).size() == 240);

    // the feature CSV is accepted wherever a manifest is
    {
        std::ofstream f(tmp / "feat.csv");
        f << a.out;
    }
    const auto p1 = proc::run({"ppaw", "--data", manifest()}, tmp.path());
    const auto p2 = proc::run({"ppaw", "--data", (tmp / "feat.csv").string()}, tmp.path());
    CHECK(p1.code == 0);
    CHECK(p1.out == p2.out);
}

TEST_CASE("offline and sweep outputs") {
    fixtures::TempDir tmp("cli-offline");
    auto r = proc::run({"offline", "--data", manifest(), "--mode", "cross-phase", "-o", (tmp / "off").string()},
                       tmp.path());
    REQUIRE(r.code == 0);
    CHECK(slurp(tmp / "off/report.json").find("\"cross_phase\"") != std::string::npos);
    CHECK(slurp(tmp / "off/dummy.json").find("\"n_minutes\": 120") != std::string::npos);
    CHECK(slurp(tmp / "off/predictions.csv").rfind("minute_index,true_bpm,predicted_bpm\n120,", 0) == 0);

    r = proc::run({"sweep-o", "--data", manifest(), "--O", "1,3"}, tmp.path());
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("O,mae,mse,query_fraction\n1,", 0) == 0);
    CHECK(r.out.find("\n3,") != std::string::npos);
}

TEST_CASE("gateway and wearable talk over TCP") {
    fixtures::TempDir tmp("cli-tcp");
    proc::Background gw({"gateway", "--port", "0", "--timeout", "20", "--accept-timeout", "60", "-o",
                         (tmp / "gw").string(), "--transcript", (tmp / "gw.log").string()});
    const auto port = proc::port_of(gw.line());
    REQUIRE_FALSE(port.empty());
    const auto w = proc::run({"wearable", "--port", port, "--data", manifest(), "-o", (tmp / "we").string()},
                             tmp.path());
    CHECK(w.code == 0);
    CHECK(gw.wait() == 0);

    // the session trace equals the offline run on the same data
    const auto recs = load_minutes(read_manifest(manifest()));
    const auto e = run_ppaw_experiment(recs, PpawConfig{});
    std::ostringstream trace;
    write_trace_csv(trace, e.bootstrap, e.steps);
    CHECK(slurp(tmp / "gw/trace.csv") == trace.str());
    CHECK(slurp(tmp / "gw/ledger.json") == slurp(tmp / "we/ledger.json"));
    CHECK(slurp(tmp / "gw.log").rfind(">{\"type\":\"HELLO\"", 0) == 0);
}
