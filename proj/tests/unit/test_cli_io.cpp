#include "stflow/config.hpp"
#include "stflow/errors.hpp"
#include "stflow/experiment.hpp"
#include "stflow/output.hpp"
#include "stflow/parallel.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <unistd.h>

using namespace stflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("stflow-cli-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    return p;
}

template <class F>
std::string field_of(F&& f) {
    try {
        f();
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<no error>";
}

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Domain;
}

const char* kSmall = R"(
[experiment]
kind = flow-sim
seed = 7

[drift]
family = sine

[time]
dt = 2^-5

[mc]
M = 40
points = 0.0 | 0.5
)";

}  // namespace

TEST(Config, DefaultsApply) {
    const auto c = parse_config("[experiment]\nkind = flow-sim\n");
    EXPECT_EQ(c.mc.M, 1000);
    EXPECT_EQ(c.time.dt, std::ldexp(1.0, -8));
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.drift.family, "zero");
    ASSERT_EQ(c.mc.separations.size(), 8u);
    EXPECT_EQ(c.mc.separations.front(), 0.125);
    ASSERT_EQ(c.mc.points.size(), 1u);
    EXPECT_EQ(c.mc.points[0].size(), 1);
}

TEST(Config, ParsesValuesAndPowers) {
    const auto c = parse_config(kSmall);
    EXPECT_EQ(c.kind, ExperimentKind::FlowSim);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.time.dt, 1.0 / 32);
    EXPECT_EQ(c.mc.M, 40);
    ASSERT_EQ(c.mc.points.size(), 2u);
    EXPECT_EQ(c.mc.points[1](0), 0.5);
}

TEST(Config, OverridesWin) {
    const auto c = parse_config(kSmall, {"mc.M=12", "drift.family = tanh", "grid.periodic=true"});
    EXPECT_EQ(c.mc.M, 12);
    EXPECT_EQ(c.drift.family, "tanh");
    EXPECT_TRUE(c.grid.periodic);
}

TEST(Config, ValidationNamesTheField) {
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"time.dt=0.3"}); }), "time.dt");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"modulus.family=quadratic"}); }), "modulus.family");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"drift.family=bogus"}); }), "drift.family");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"mc.colour=red"}); }), "mc.colour");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"mc.M=abc"}); }), "mc.M");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"mc.M=0"}); }), "mc.M");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"grid.d=4"}); }), "grid.d");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"mc.points=1,2"}); }), "mc.points");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"time.master_dt=0.02"}); }), "time.master_dt");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"experiment.kind=none"}); }), "experiment.kind");
    EXPECT_EQ(field_of([] { parse_config("[experiment]\nseed = 1\n"); }), "experiment.kind");
    EXPECT_EQ(field_of([] { parse_config(kSmall, {"mc.n_list=4,2"}); }), "mc.n_list");
    EXPECT_EQ(field_of([] { parse_config("[extra]\na = 1\n[experiment]\nkind = flow-sim\n"); }), "extra");
}

TEST(Config, ValidationIsConfigExitCode) {
    EXPECT_EQ(exit_code(kind_of([] { parse_config(kSmall, {"time.dt=0.3"}); })), 2);
    EXPECT_EQ(exit_code(kind_of([] { parse_config("[experiment\nkind = x\n"); })), 2);
}

TEST(Config, SyntaxErrorsAreParseErrors) {
    EXPECT_EQ(kind_of([] { parse_config("[experiment\nkind = flow-sim\n"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { parse_config("[experiment]\njust words\n"); }), ErrorKind::Parse);
    EXPECT_EQ(kind_of([] { parse_config(kSmall, {"no-equals"}); }), ErrorKind::Parse);
}

TEST(Config, MissingFileIsIo) {
    EXPECT_EQ(kind_of([] { load_config("/nonexistent/stflow.ini"); }), ErrorKind::Io);
}

TEST(Config, HashIsCanonical) {
    const auto a = parse_config(kSmall);
    const std::string reordered = "; comment\n[mc]\npoints = 0 | 0.5\nM = 40\n[time]\ndt = 0.03125\n"
                                  "[drift]\nfamily = sine\n[experiment]\nseed = 7\nkind = flow-sim\n";
    EXPECT_EQ(a.hash(), parse_config(reordered).hash());
    EXPECT_EQ(a.hash(), parse_config(kSmall, {"experiment.output=/elsewhere"}).hash());
    EXPECT_NE(a.hash(), parse_config(kSmall, {"experiment.seed=8"}).hash());
    EXPECT_NE(a.hash(), parse_config(kSmall, {"mc.M=41"}).hash());
    EXPECT_EQ(a.hash_hex().size(), 16u);
}

TEST(Config, BuildsDriftAndModulus) {
    auto c = parse_config(kSmall, {"drift.family=constant", "drift.value=0.25"});
    EXPECT_EQ(build_drift(c)(0.0, Vec::Zero(1))(0), 0.25);
    c = parse_config(kSmall, {"drift.family=ou", "drift.mollify=4"});
    EXPECT_NEAR(build_drift(c)(0.0, Vec::Constant(1, 1.0))(0), -1.0, 1e-12);
    const Modulus m = build_modulus(parse_config(kSmall, {"modulus.family=inverse-log", "modulus.alpha=1"}).modulus);
    EXPECT_EQ(classify(m), ModulusClass::NotDini);
}

TEST(Config, OutputDirFromEnvironment) {
    auto c = parse_config(kSmall);
    ::setenv("STFLOW_OUTPUT_DIR", "/tmp/from-env", 1);
    EXPECT_EQ(c.output_dir(), "/tmp/from-env");
    c.output = "explicit";
    EXPECT_EQ(c.output_dir(), "explicit");
    ::unsetenv("STFLOW_OUTPUT_DIR");
    c.output.clear();
    EXPECT_EQ(c.output_dir(), "stflow-out");
}

TEST(Csv, QuotesPerRfc4180) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, HeaderAndLineEndings) {
    Table t({"a", "b"});
    t.add({cell(1), cell(0.1)});
    EXPECT_EQ(to_csv(t, "00ff"), "# config-hash: 00ff\na,b\n1,0.1\n");
    EXPECT_EQ(to_csv(t), "a,b\n1,0.1\n");
    EXPECT_THROW(t.add({"only one"}), Error);
}

TEST(Csv, RoundTrips) {
    Table t({"name", "value"});
    t.add({"x, y", cell(1e-300)});
    t.add({"quote \" inside", cell(-0.0)});
    t.add({"multi\nline", cell(3.141592653589793)});
    const Table back = parse_csv(to_csv(t, "abc"));
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(std::stod(back.rows[2][1]), 3.141592653589793);
    EXPECT_EQ(kind_of([] { parse_csv("a,b\n\"open\n"); }), ErrorKind::Parse);
}

TEST(Csv, NumbersAreShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3), "0.3333333333333333");
    EXPECT_EQ(format_number(2.0), "2");
    for (double v : {1e-17, 6.02e23, -2.5e-8, 0.7071067811865476}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Output, UnwritablePathIsIo) {
    const fs::path dir = scratch("io");
    write_file(dir / "file", "x");
    EXPECT_EQ(exit_code(kind_of([&] { write_file(dir / "file" / "child.csv", "y"); })), 4);
    EXPECT_EQ(read_file(dir / "file"), "x");
}

TEST(Experiment, FlowSimWritesHashedFiles) {
    const fs::path dir = scratch("flow");
    const auto c = parse_config(kSmall, {"experiment.output=" + dir.string()});
    const RunResult r = run_experiment(c);
    ASSERT_EQ(r.files.size(), 3u);
    for (const auto& f : r.files) ASSERT_TRUE(fs::exists(f)) << f;
    const std::string csv = read_file(dir / "flow-sim.csv");
    EXPECT_EQ(csv.rfind("# config-hash: " + c.hash_hex() + "\n", 0), 0u);
    const Table t = parse_csv(csv);
    EXPECT_EQ(t.rows.size(), 2u * 33u);
    EXPECT_EQ(t.columns.front(), "point");
    EXPECT_TRUE(fs::exists(r.manifest));
    EXPECT_NE(read_file(r.manifest).find("wall_seconds"), std::string::npos);
}

TEST(Experiment, ByteIdenticalAcrossThreads) {
    std::vector<std::string> runs;
    for (unsigned th : {1u, 3u}) {
        set_default_threads(th);
        const fs::path dir = scratch("threads" + std::to_string(th));
        const auto c = parse_config(kSmall, {"experiment.output=" + dir.string(), "mc.record=paths"});
        const RunResult r = run_experiment(c);
        std::string all;
        for (const auto& f : r.files) all += read_file(f);
        runs.push_back(all);
    }
    set_default_threads(0);
    EXPECT_EQ(runs[0], runs[1]);
}

TEST(Experiment, ModulusVerifyDiniPasses) {
    const fs::path dir = scratch("mv-ok");
    const auto c = parse_config("[experiment]\nkind = modulus-verify\n[modulus]\nfamily = inverse-log\nalpha = 2\n",
                                {"experiment.output=" + dir.string()});
    run_experiment(c);
    const std::string s = read_file(dir / "modulus-verify-summary.json");
    EXPECT_NE(s.find("\"finite\": true"), std::string::npos);
    EXPECT_NE(s.find("max_regularity"), std::string::npos);
}

TEST(Experiment, ModulusVerifyNonDiniExitsThreeWithReport) {
    const fs::path dir = scratch("mv-bad");
    const auto c = parse_config("[experiment]\nkind = modulus-verify\n[modulus]\nfamily = inverse-log\nalpha = 1\n",
                                {"experiment.output=" + dir.string()});
    try {
        run_experiment(c);
        FAIL() << "expected NonFiniteError";
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(exit_code(e.kind()), 3);
    }
    EXPECT_TRUE(fs::exists(dir / "modulus-verify-summary.json"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
    EXPECT_NE(read_file(dir / "modulus-verify-summary.json").find("\"finite\": false"), std::string::npos);
}

TEST(Experiment, LambdaSweepReportsBeforeNotReached) {
    const fs::path dir = scratch("sweep");
    const std::string ini = "[experiment]\nkind = lambda-sweep\n[drift]\nfamily = sine\n[grid]\nL = 3.141592653589793\n"
                            "n = 32\nperiodic = true\n[time]\ndt = 2^-4\n[mc]\nlambda_k_max = 0\n";
    EXPECT_EQ(kind_of([&] { run_experiment(parse_config(ini, {"experiment.output=" + dir.string()})); }),
              ErrorKind::NotReached);
    const Table t = parse_csv(read_file(dir / "lambda-sweep.csv"));
    EXPECT_EQ(t.rows.size(), 1u);
    run_experiment(parse_config(ini, {"experiment.output=" + dir.string(), "mc.lambda_k_max=8"}));
    EXPECT_NE(read_file(dir / "lambda-sweep-summary.json").find("\"reached\": true"), std::string::npos);
}

TEST(Experiment, EveryKindRunsSmall) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
        {"pde-solve", {"grid.L=3.141592653589793", "grid.n=32", "grid.periodic=true", "time.dt=2^-4", "drift.family=sine"}},
        {"flow-modulus", {"mc.M=50", "time.dt=2^-4", "drift.family=ou", "mc.separations=0.5,0.25,0.125,0.0625"}},
        {"mollify-convergence", {"mc.M=30", "time.dt=2^-4", "drift.family=holder", "mc.n_list=2,4", "mc.quantity=gradX"}},
        {"transport", {"mc.M=5", "time.dt=2^-3", "grid.n=9", "grid.L=2", "drift.family=sine"}},
        {"weak-residual", {"mc.M=5", "time.dt=2^-3", "grid.n=9", "grid.L=2", "transport.refinements=2"}},
        {"nonuniqueness-demo", {"mc.M=20", "time.dt=2^-4", "mc.n_list=2,4"}},
    };
    for (const auto& [kind, extra] : cases) {
        const fs::path dir = scratch("kind-" + kind);
        std::vector<std::string> o = extra;
        o.push_back("experiment.output=" + dir.string());
        const RunResult r = run_experiment(parse_config("[experiment]\nkind = " + kind + "\n", o));
        EXPECT_GE(r.files.size(), 2u) << kind;
        for (const auto& f : r.files) EXPECT_GT(fs::file_size(f), 0u) << f;
    }
}

TEST(Experiment, TransportStaysInDatumRange) {
    const fs::path dir = scratch("transport-range");
    run_experiment(parse_config("[experiment]\nkind = transport\n[transport]\ndatum = step\n",
                                {"experiment.output=" + dir.string(), "mc.M=6", "time.dt=2^-3", "grid.n=17",
                                 "drift.family=holder"}));
    const Table t = parse_csv(read_file(dir / "transport.csv"));
    for (const auto& row : t.rows) {
        EXPECT_GE(std::stod(row[2]), 0.0);
        EXPECT_LE(std::stod(row[4]), 1.0);
    }
}
