#include <gtest/gtest.h>

#include <sstream>

#include "percheck/cli.h"
#include "percheck/io.h"
#include "support.h"

using namespace percheck;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Cli, CheckPrintsThirteenFifteenths) {
    const auto r = run({"check", "--scenario", testsupport::data("obj_vmax1.json")});
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(first_line(r.out), "0.866666667");
    EXPECT_NE(r.out.find("\"chain_states\":66"), std::string::npos);
    for (const auto* engine : {"iterate", "enumerate"}) {
        const auto e = run({"--engine", engine, "check", "--scenario", testsupport::data("obj_vmax1.json")});
        EXPECT_EQ(first_line(e.out), "0.866666667") << engine;
    }
    const auto restart = run({"check", "--semantics", "restart", "--scenario", testsupport::data("obj_vmax1.json")});
    EXPECT_EQ(first_line(restart.out), "0.866666667");
}

TEST(Cli, IdentityPerceptionSatisfiesTheStopSpec) {
    const auto r = run({"check", "--scenario", testsupport::data("ped_vmax10.json"), "--cm", "identity", "--formula", "phi2"});
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(first_line(r.out), "1.000000000");
    const auto pr = run({"check", "--scenario", testsupport::data("small_ped.json"), "--pr", "0.8,0.8", "--formula", "phi2"});
    EXPECT_EQ(pr.code, cli::kOk) << pr.err;
    const auto file = run({"check", "--scenario", testsupport::data("obj_vmax1.json"), "--cm", testsupport::data("cm1_rows.json")});
    EXPECT_EQ(first_line(file.out), "0.866666667");
}

TEST(Cli, ExitCodes) {
    const auto parse = run({"check", "--scenario", testsupport::data("obj_vmax1.json"), "--formula", "G(cell=)"});
    EXPECT_EQ(parse.code, cli::kParse);
    EXPECT_NE(parse.err.find("ParseError"), std::string::npos);
    EXPECT_NE(parse.err.find("offset 7"), std::string::npos);

    EXPECT_EQ(run({"check", "--scenario", testsupport::data("obj_vmax1.json"), "--pr", "0.1,0.9"}).code, cli::kConfig);
    EXPECT_EQ(run({"check", "--scenario", "/nonexistent.json"}).code, cli::kIo);
    EXPECT_EQ(run({"bogus"}).code, cli::kUsage);
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"check"}).code, cli::kUsage);
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
    EXPECT_EQ(run({"check", "--scenario", testsupport::data("obj_vmax1.json"), "--formula", "G F stopped"}).code, cli::kEngine);
    EXPECT_EQ(run({"--engine", "magic", "check", "--scenario", testsupport::data("obj_vmax1.json")}).code, cli::kConfig);

    const auto zero = run({"simulate", "--scenario", testsupport::data("obj_vmax1.json"), "--samples", "0"});
    EXPECT_EQ(zero.code, cli::kConfig);
    EXPECT_NE(zero.err.find("ConfigError"), std::string::npos);
}

TEST(Cli, Metrics) {
    const auto r = run({"metrics", "--cm", "cm1", "--class", "ped", "--sizes", "1,1,1"});
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("precision_size_weighted 0.800000000"), std::string::npos);
    EXPECT_NE(r.out.find("precision_standard 0.666666667"), std::string::npos);
    EXPECT_NE(r.out.find("recall 0.666666667"), std::string::npos);

    const auto no_sizes = run({"metrics", "--cm", "cm1", "--class", "ped"});
    EXPECT_NE(no_sizes.out.find("precision_size_weighted n/a"), std::string::npos);
    EXPECT_NE(no_sizes.out.find("precision_standard 0.666666667"), std::string::npos);

    const auto id = run({"metrics", "--cm", "identity", "--class", "obj", "--sizes", "1,2,3"});
    EXPECT_NE(id.out.find("precision_size_weighted 1.000000000"), std::string::npos);
    EXPECT_NE(id.out.find("precision_standard 1.000000000"), std::string::npos);
    EXPECT_NE(id.out.find("recall 1.000000000"), std::string::npos);

    EXPECT_EQ(run({"metrics", "--cm", "cm1", "--class", "dog"}).code, cli::kConfig);
}

TEST(Cli, SimulateIsReproducible) {
    const std::vector<std::string> args{"--seed", "42", "simulate", "--scenario", testsupport::data("obj_vmax1.json"), "--samples", "100000"};
    const auto a = run(args);
    const auto b = run(args);
    EXPECT_EQ(a.code, cli::kOk) << a.err;
    EXPECT_EQ(a.out, b.out);
    double lo = 0, hi = 0;
    const auto ci = a.out.substr(a.out.find("ci95"));
    ASSERT_EQ(std::sscanf(ci.c_str(), "ci95 [%lf, %lf]", &lo, &hi), 2) << a.out;
    EXPECT_LE(lo, 13.0 / 15);
    EXPECT_GE(hi, 13.0 / 15);
}

TEST(Cli, VerifyController) {
    const auto r = run({"verify-controller", "--v-max", "4"});
    EXPECT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("violations 0"), std::string::npos);
    EXPECT_EQ(run({"verify-controller", "--N", "8", "--k", "4", "--v-max", "3"}).code, cli::kConfig);
}

TEST(Cli, ExportImportRoundTrip) {
    const auto dir = testsupport::scratch("cli_export");
    const auto prefix = (dir / "m").string();
    const auto scenario = testsupport::data("obj_vmax1.json");
    ASSERT_EQ(run({"export", "--scenario", scenario, "--format", "explicit", "--out", prefix}).code, cli::kOk);
    const auto first = io::read_file(prefix + ".tra");
    ASSERT_EQ(run({"export", "--scenario", scenario, "--format", "explicit", "--out", prefix}).code, cli::kOk);
    EXPECT_EQ(io::read_file(prefix + ".tra"), first);

    const auto back = run({"import", prefix, "--formula", "G(env=ped | !(cell=56 & speed=0))"});
    EXPECT_EQ(back.code, cli::kOk) << back.err;
    EXPECT_NE(back.out.find("0.866666667"), std::string::npos) << back.out;

    ASSERT_EQ(run({"export", "--scenario", scenario, "--format", "prism", "--out", prefix}).code, cli::kOk);
    EXPECT_NE(io::read_file(prefix + ".pm").find("dtmc"), std::string::npos);
    ASSERT_EQ(run({"export", "--scenario", scenario, "--format", "dot", "--out", prefix}).code, cli::kOk);
    EXPECT_NE(io::read_file(prefix + ".dot").find("digraph"), std::string::npos);

    EXPECT_EQ(run({"import", (dir / "missing").string()}).code, cli::kIo);
}

TEST(Cli, SweepWritesDeterministicCsv) {
    const auto dir = testsupport::scratch("cli_sweep");
    const auto spec = (dir / "spec.json").string();
    io::write_file(spec, R"({"N": 8, "k": 6, "v0": [1, 2], "v_max": [1, 2], "cm": "cm1", "formula": "phi3"})");
    const auto out = (dir / "a.csv").string();
    ASSERT_EQ(run({"sweep", spec, "--out", out, "--threads", "3"}).code, cli::kOk);
    const auto a = io::read_file(out);
    ASSERT_EQ(run({"sweep", spec, "--out", out, "--threads", "1"}).code, cli::kOk);
    EXPECT_EQ(io::read_file(out), a);
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 3 * 3);

    io::write_file(spec, R"({"v0": [], "v_max": [1]})");
    EXPECT_EQ(run({"sweep", spec}).code, cli::kConfig);
}
