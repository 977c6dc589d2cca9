#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "percheck/engine.h"
#include "percheck/error.h"
#include "percheck/io.h"
#include "percheck/logic.h"
#include "percheck/sweep.h"
#include "support.h"

using namespace percheck;
using scenario::EnvClass;

namespace {

template <class F>
std::string expect_errc(F&& fn, Errc code) {
    try {
        fn();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "no error, expected " << errc_name(code);
    return {};
}

using EdgeTriple = std::tuple<scenario::SystemState, scenario::SystemState, double>;

std::vector<EdgeTriple> edge_multiset(const chain::MarkovChain& m) {
    std::vector<EdgeTriple> out;
    for (std::size_t s = 0; s < m.size(); ++s) {
        for (const auto& e : m.successors(s)) out.emplace_back(m.state(s), m.state(e.target), e.probability);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<logic::Formula> all_shapes(const scenario::ScenarioParams& p) {
    std::vector<logic::Formula> out;
    for (const auto* name : {"phi1", "phi2", "phi3"}) out.push_back(logic::parse(scenario::expand_named_spec(name, p)));
    const auto stop = std::to_string(p.sidewalk_cell() - 1);
    for (const std::string& text : std::vector<std::string>{"F(cell=" + stop + " & speed=0)", "(speed>0) U (cell=" + stop + ")", "X(speed=1)",
                             "G<=6(speed>0)", "F<=6(stopped)", "(speed>0) U<=5 (road_end)"}) {
        out.push_back(logic::parse(text));
    }
    return out;
}

}  // namespace

TEST(Io, ScenarioFiles) {
    const auto obj = io::load_scenario(testsupport::data("obj_vmax1.json"));
    EXPECT_EQ(obj.road_length, 65);
    EXPECT_EQ(obj.sidewalk_cell, 57);
    EXPECT_EQ(obj.v_max, 1);
    EXPECT_EQ(obj.env, EnvClass::Obj);
    EXPECT_EQ(obj.init(), (scenario::AgentState{1, 1}));
    const auto small = io::parse_scenario_json(R"({"N": 8, "k": 6, "v_max": 2, "v0": 0, "x0": 3, "env": "empty",
                                                  "stop_semantics": "restart", "ped_policy": "fastest"})");
    EXPECT_EQ(small.init(), (scenario::AgentState{3, 0}));
    EXPECT_EQ(small.semantics, scenario::StopSemantics::Restart);
    EXPECT_EQ(small.ped_policy, scenario::PedPolicy::Fastest);

    expect_errc([] { io::parse_scenario_json(R"({"N": 8, "k": 6, "v0": 1, "env": "ped"})"); }, Errc::ConfigError);
    expect_errc([] { io::parse_scenario_json(R"({"N": 8, "k": 6, "v_max": 2, "v0": 1, "env": "cat"})"); }, Errc::ConfigError);
    expect_errc([] { io::parse_scenario_json("{"); }, Errc::ConfigError);
    expect_errc([] { io::load_scenario("/nonexistent/scenario.json"); }, Errc::IoError);
}

TEST(Io, ConfusionFiles) {
    EXPECT_EQ(io::load_confusion(testsupport::data("cm1.json")), confusion::cm1());
    EXPECT_EQ(io::load_confusion(testsupport::data("cm1_rows.json")), confusion::cm1());
    expect_errc([] { io::parse_confusion_json(R"({"labels": ["ped", "obj"], "entries": [[0.5, 1], [0.4, 0]]})"); },
                Errc::ColumnNotStochastic);
    expect_errc([] { io::parse_confusion_json(R"({"labels": ["ped"]})"); }, Errc::ConfigError);
}

TEST(Io, SweepSpecParsing) {
    const auto s = sweep::parse_sweep_json(R"({"v0": {"from": 1, "to": 10}, "v_max": [1, 2, 3], "env": ["ped", "obj"],
                                             "cm": "cm1", "formula": {"ped": "phi2", "obj": "phi1"},
                                             "engine": "iterate", "seed": 5, "output": "x.csv", "split_by_env": true})");
    EXPECT_EQ(s.v0.size(), 10u);
    EXPECT_EQ(s.v_max, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(s.envs, (std::vector<EnvClass>{EnvClass::Ped, EnvClass::Obj}));
    ASSERT_TRUE(s.cm);
    EXPECT_EQ(*s.cm, confusion::cm1());
    EXPECT_EQ(s.formula.at(EnvClass::Obj), "phi1");
    EXPECT_EQ(s.engine.method, engine::Method::Iterate);
    EXPECT_EQ(s.engine.seed, 5u);
    EXPECT_TRUE(s.split_by_env);

    const auto d = sweep::parse_sweep_json(R"({"v0": [1], "v_max": [5], "pr": "default"})");
    EXPECT_EQ(d.pr_pairs, sweep::default_pr_pairs());
    for (std::size_t i = 1; i < d.pr_pairs.size(); ++i) EXPECT_GT(d.pr_pairs[i].second, d.pr_pairs[i - 1].second);

    const auto rel = sweep::parse_sweep_json(R"({"v0": [1], "v_max": [1], "cm": "cm1.json"})", PERCHECK_TEST_DATA);
    EXPECT_EQ(*rel.cm, confusion::cm1());

    expect_errc([] { sweep::parse_sweep_json(R"({"v0": [], "v_max": [1]})"); }, Errc::ConfigError);
    expect_errc([] { sweep::parse_sweep_json(R"({"v0": {"from": 4, "to": 2}, "v_max": [1]})"); }, Errc::ConfigError);
    expect_errc([] { sweep::parse_sweep_json(R"({"v0": [1], "v_max": [1], "pr": [[0.1, 0.9]]})"); }, Errc::ConfigError);
    expect_errc([] { sweep::parse_sweep_json(R"({"v0": [1], "v_max": [1], "formula": {"ped": "phi2"}})"); }, Errc::ConfigError);
    expect_errc([] { sweep::parse_sweep_json(R"({"v0": [1], "v_max": [1], "engine": "magic"})"); }, Errc::ConfigError);
    expect_errc([] { sweep::parse_sweep_json(R"({"v_max": [1]})"); }, Errc::ConfigError);
}

TEST(Io, ExplicitRoundTripPreservesEdgesAndResults) {
    std::vector<std::pair<scenario::ScenarioParams, chain::MarkovChain>> chains;
    for (const auto env : scenario::kEnvClasses) {
        const auto small = testsupport::small();
        chains.emplace_back(small, testsupport::build(small, confusion::cm1(), env, 1));
        const auto restart = testsupport::small(scenario::StopSemantics::Restart);
        chains.emplace_back(restart, testsupport::build(restart, confusion::from_precision_recall(0.8, 0.8), env, 2));
        const auto road = testsupport::full_road(4);
        chains.emplace_back(road, testsupport::build(road, confusion::cm1(), env, 3));
    }
    const auto dir = testsupport::scratch("io_round_trip");
    int n = 0;
    for (const auto& [params, m] : chains) {
        const auto prefix = (dir / ("m" + std::to_string(n++))).string();
        io::export_explicit(m, prefix);
        const auto back = io::import_explicit(prefix);
        EXPECT_EQ(back.env(), m.env());
        EXPECT_EQ(back.size(), m.size());
        EXPECT_EQ(edge_multiset(back), edge_multiset(m));
        EXPECT_EQ(back.labels(), m.labels());
        for (const auto& f : all_shapes(params)) {
            EXPECT_NEAR(engine::check(back, f, 0).probability, engine::check(m, f, 0).probability, 1e-12) << logic::to_string(f);
        }
    }
}

TEST(Io, ExportIsByteStable) {
    const auto m = testsupport::build(testsupport::full_road(3), confusion::cm1(), EnvClass::Ped, 2);
    const auto dir = testsupport::scratch("io_stable");
    io::export_explicit(m, (dir / "a").string());
    io::export_explicit(testsupport::build(testsupport::full_road(3), confusion::cm1(), EnvClass::Ped, 2), (dir / "b").string());
    for (const auto* ext : {".tra", ".lab", ".sta"}) {
        EXPECT_EQ(io::read_file(dir / (std::string("a") + ext)), io::read_file(dir / (std::string("b") + ext))) << ext;
    }
    EXPECT_EQ(io::to_prism(m), io::to_prism(m));
}

TEST(Io, ExplicitFormat) {
    const auto m = testsupport::build(testsupport::small(), confusion::cm1(), EnvClass::Obj, 1);
    std::ostringstream tra, lab, sta;
    io::write_tra(tra, m);
    io::write_lab(lab, m);
    io::write_sta(sta, m);
    std::istringstream tin(tra.str());
    std::string line;
    std::getline(tin, line);
    EXPECT_EQ(line, "STATES " + std::to_string(m.size()) + " TRANSITIONS " + std::to_string(m.transition_count()));
    std::size_t count = 0;
    while (std::getline(tin, line)) {
        std::size_t a = 0, b = 0;
        double p = 0;
        std::istringstream ls(line);
        ASSERT_TRUE(ls >> a >> b >> p) << line;
        EXPECT_EQ(p, m.probability(a, b));
        ++count;
    }
    EXPECT_EQ(count, m.transition_count());
    EXPECT_NE(lab.str().find("\"stopped\""), std::string::npos);
    EXPECT_NE(lab.str().find("\"road_end\""), std::string::npos);
    EXPECT_NE(lab.str().find("\"env_obj\""), std::string::npos);
    EXPECT_EQ(sta.str().rfind("(cell,speed)\n0:(1,1)\n", 0), 0u);
    EXPECT_EQ(io::format_exact(13.0 / 15), "0.8666666666666667");
    EXPECT_EQ(std::stod(io::format_exact(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Io, IdentityChainHasOneTransitionPerState) {
    const auto params = testsupport::full_road(5);
    for (const auto env : scenario::kEnvClasses) {
        const auto m = testsupport::build(params, confusion::identity(confusion::env_labels()), env, 3);
        EXPECT_EQ(m.transition_count(), m.size());
        for (std::size_t s = 0; s < m.size(); ++s) EXPECT_EQ(m.successors(s).size(), 1u);
    }
}

TEST(Io, ImportErrors) {
    const auto m = testsupport::build(testsupport::small(), confusion::cm1(), EnvClass::Ped, 1);
    const auto dir = testsupport::scratch("io_errors");
    const auto prefix = (dir / "m").string();
    io::export_explicit(m, prefix);
    const auto tra = io::read_file(prefix + ".tra");

    auto damaged = tra;
    const auto second_line = damaged.find('\n') + 1;
    const auto end = damaged.find('\n', second_line);
    const auto first_edge = damaged.substr(second_line, end - second_line);
    damaged.replace(second_line, end - second_line, first_edge.substr(0, first_edge.rfind(' ')) + " 1.2");
    io::write_file(prefix + ".tra", damaged);
    auto msg = expect_errc([&] { io::import_explicit(prefix); }, Errc::FormatError);
    EXPECT_NE(msg.find("m.tra:2"), std::string::npos) << msg;

    io::write_file(prefix + ".tra", tra.substr(0, tra.rfind('\n', tra.size() - 2) + 1));
    expect_errc([&] { io::import_explicit(prefix); }, Errc::FormatError);

    io::write_file(prefix + ".tra", tra);
    EXPECT_NO_THROW(io::import_explicit(prefix));
    std::filesystem::remove(prefix + ".sta");
    msg = expect_errc([&] { io::import_explicit(prefix); }, Errc::FormatError);
    EXPECT_NE(msg.find("m.sta"), std::string::npos) << msg;
}

TEST(Io, PrismAndDot) {
    const auto m = testsupport::build(testsupport::full_road(1), confusion::cm1(), EnvClass::Obj, 1);
    const auto prism = io::to_prism(m);
    EXPECT_NE(prism.find("\ndtmc\n"), std::string::npos);
    EXPECT_NE(prism.find("s : [0.." + std::to_string(m.size() - 1) + "] init 0;"), std::string::npos);
    EXPECT_NE(prism.find("label \"stopped\""), std::string::npos);
    EXPECT_EQ(std::count(prism.begin(), prism.end(), '['), static_cast<long>(m.size()) + 1);
    EXPECT_NE(prism.find("endmodule"), std::string::npos);

    const auto dot = io::to_dot(m);
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(dot.begin(), dot.end(), '>')), m.transition_count());
}

TEST(Sweep, RowsAreOrderedAndDeterministic) {
    auto spec = sweep::parse_sweep_json(R"({"N": 8, "k": 6, "v0": [1, 2, 3], "v_max": [1, 2], "env": ["obj", "ped"],
                                            "pr": [[0.8, 0.8], [0.9, 0.6]], "formula": "phi3"})");
    const auto rows = sweep::run_sweep(spec, 4);
    ASSERT_EQ(rows.size(), 2u * 2u * 3u);
    EXPECT_EQ(rows[0].env, EnvClass::Obj);
    EXPECT_EQ(rows[0].v_max, 1);
    EXPECT_EQ(rows[0].v0, 1);
    EXPECT_EQ(rows[1].v_max, 2);
    EXPECT_EQ(rows[2].v0, 2);
    EXPECT_EQ(*rows[3].p, 0.9);
    EXPECT_EQ(rows[6].env, EnvClass::Ped);
    for (const auto& r : rows) {
        EXPECT_TRUE(r.error.empty()) << r.error;
        EXPECT_LE(r.v0, r.v_max);
        const auto cm = confusion::from_precision_recall(*r.p, *r.r);
        const auto point = sweep::evaluate_point({8, 6, r.v_max}, {1, r.v0}, r.env, cm, "phi3", {});
        EXPECT_NEAR(point.result.probability, r.probability, 1e-12);
        EXPECT_EQ(point.chain_states, r.chain_states);
    }
    std::ostringstream a, b;
    sweep::write_csv(a, rows);
    sweep::write_csv(b, sweep::run_sweep(spec, 1));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().rfind(sweep::csv_header() + "\n", 0), 0u);
    EXPECT_EQ(sweep::csv_header(), "env,v0,v_max,p,r,cm,formula,probability,engine,residual,chain_states,wall_time_ms,error");
}

TEST(Sweep, PointFailuresLandInTheErrorColumn) {
    auto spec = sweep::parse_sweep_json(R"({"N": 8, "k": 6, "v0": [1], "v_max": [2], "env": ["obj"],
                                            "formula": "G F stopped"})");
    const auto rows = sweep::run_sweep(spec, 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].error.rfind("UnsupportedFragment", 0), 0u) << rows[0].error;
    std::ostringstream csv;
    sweep::write_csv(csv, rows);
    EXPECT_NE(csv.str().find("UnsupportedFragment"), std::string::npos);

    auto none = sweep::parse_sweep_json(R"({"v0": [5], "v_max": [2]})");
    expect_errc([&] { sweep::run_sweep(none); }, Errc::ConfigError);
}

TEST(Sweep, SplitOutputs) {
    const auto dir = testsupport::scratch("sweep_split");
    auto spec = sweep::parse_sweep_json(R"({"N": 8, "k": 6, "v0": [1, 2], "v_max": [2], "split_by_env": true})");
    spec.output = (dir / "fig.csv").string();
    const auto written = sweep::write_outputs(spec, sweep::run_sweep(spec));
    ASSERT_EQ(written.size(), 3u);
    for (const auto* env : {"ped", "obj", "empty"}) {
        const auto text = io::read_file(dir / ("fig_" + std::string(env) + ".csv"));
        EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3) << env;
    }
}
