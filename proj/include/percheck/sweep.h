#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "percheck/confusion.h"
#include "percheck/engine.h"
#include "percheck/scenario.h"

namespace percheck::sweep {

struct SweepSpec {
    int road_length = 65;
    int sidewalk_cell = 57;
    std::vector<int> v0;
    std::vector<int> v_max;
    std::vector<scenario::EnvClass> envs;
    /// When non-empty each pair yields CM(p,r); otherwise `cm` is used for every point.
    std::vector<std::pair<double, double>> pr_pairs;
    std::optional<confusion::ConfusionMatrix> cm;
    std::string cm_id;
    /// Formula text (named specs phi1..phi3 allowed) per environment class.
    std::map<scenario::EnvClass, std::string> formula;
    scenario::StopSemantics semantics = scenario::StopSemantics::Absorb;
    scenario::PedPolicy ped_policy = scenario::PedPolicy::Slowest;
    engine::EngineConfig engine;
    std::string output;
    /// Write one file per environment class, <stem>_<env>.csv.
    bool split_by_env = false;
    /// Fill wall_time_ms; off by default so reruns are byte-identical.
    bool timing = false;
};

/// JSON sweep description. Relative "cm" file paths resolve against `base_dir`.
SweepSpec parse_sweep_json(const std::string& text, const std::string& base_dir = ".");
SweepSpec load_sweep(const std::string& path);

/// Default precision/recall pairs for the v_max = 5 study, ordered by increasing recall.
const std::vector<std::pair<double, double>>& default_pr_pairs();

struct ResultRow {
    scenario::EnvClass env = scenario::EnvClass::Ped;
    int v0 = 0;
    int v_max = 0;
    std::optional<double> p;
    std::optional<double> r;
    std::string cm;
    std::string formula;
    double probability = 0.0;
    std::string engine;
    double residual = 0.0;
    std::size_t chain_states = 0;
    std::optional<double> wall_time_ms;
    std::string error;
};

/// Grid order: env, (p,r) pair, v_max, v0. Points with v0 > v_max are skipped. Per-point failures land in
/// the error column. Throws ConfigError for an empty range or an infeasible pair.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, unsigned threads = 0);

std::string csv_header();
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);

/// Writes spec.output, or <stem>_<env>.csv files when split_by_env is set. Returns the paths written.
std::vector<std::string> write_outputs(const SweepSpec& spec, const std::vector<ResultRow>& rows);

}  // namespace percheck::sweep

namespace percheck::sweep {

struct PointResult {
    engine::CheckResult result;
    std::size_t chain_states = 0;
};

/// Builds the closed-loop chain for one scenario and checks `formula` (named specs expanded) from its
/// initial state.
PointResult evaluate_point(const scenario::ScenarioParams& params, const scenario::AgentState& init, scenario::EnvClass env,
                           const confusion::ConfusionMatrix& cm, const std::string& formula, const engine::EngineConfig& cfg,
                           scenario::PedPolicy policy = scenario::PedPolicy::Slowest);

}  // namespace percheck::sweep
