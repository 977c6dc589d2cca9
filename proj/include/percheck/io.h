#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "percheck/chain.h"
#include "percheck/confusion.h"
#include "percheck/scenario.h"

namespace percheck::io {

/// {"labels": [...], "columns_are_true_class": true, "entries": [[...], ...]}. Entries are numbers or
/// strings such as "10/15", which are kept exact.
confusion::ConfusionMatrix parse_confusion_json(const std::string& text);
confusion::ConfusionMatrix load_confusion(const std::filesystem::path& path);

struct ScenarioConfig {
    int road_length = 65;
    int sidewalk_cell = 57;
    int v_max = 1;
    int v0 = 1;
    int x0 = 1;
    scenario::EnvClass env = scenario::EnvClass::Obj;
    scenario::StopSemantics semantics = scenario::StopSemantics::Absorb;
    scenario::PedPolicy ped_policy = scenario::PedPolicy::Slowest;

    scenario::ScenarioParams params() const;
    scenario::AgentState init() const { return {x0, v0}; }
};

/// {"N": 65, "k": 57, "v_max": 5, "v0": 3, "env": "ped", "stop_semantics": "absorb"}; optional "x0" (default 1)
/// and "ped_policy" ("slowest" or "fastest").
ScenarioConfig parse_scenario_json(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Explicit-state triple: <prefix>.tra, <prefix>.lab, <prefix>.sta.
void write_tra(std::ostream& os, const chain::MarkovChain& chain);
void write_lab(std::ostream& os, const chain::MarkovChain& chain);
void write_sta(std::ostream& os, const chain::MarkovChain& chain);
void export_explicit(const chain::MarkovChain& chain, const std::string& prefix);

/// Reads the triple back; the environment class comes from the env_<class> label.
chain::MarkovChain import_explicit(const std::string& prefix);

std::string to_prism(const chain::MarkovChain& chain);
std::string to_dot(const chain::MarkovChain& chain);

/// 17 significant digits; reads back to the same double.
std::string format_exact(double x);

}  // namespace percheck::io
