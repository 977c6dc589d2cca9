#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "percheck/chain.h"
#include "percheck/confusion.h"
#include "percheck/scenario.h"

namespace testsupport {

using namespace percheck;

inline std::string data(const std::string& name) { return std::string(PERCHECK_TEST_DATA) + "/" + name; }

inline scenario::ScenarioParams small(scenario::StopSemantics sem = scenario::StopSemantics::Absorb) { return {8, 6, 2, sem}; }
inline scenario::ScenarioParams full_road(int v_max, scenario::StopSemantics sem = scenario::StopSemantics::Absorb) {
    return {65, 57, v_max, sem};
}

inline chain::MarkovChain build(const scenario::ScenarioParams& params, const confusion::ConfusionMatrix& cm, scenario::EnvClass env,
                                int v0) {
    return chain::build_markov_chain(params, scenario::make_controller(params), cm, env, {1, v0});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("percheck_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Random row-stochastic chain with a few absorbing states; states carry distinct (cell, speed) pairs.
inline chain::MarkovChain random_chain(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> degree(1, 3);
    std::uniform_real_distribution<double> weight(0.05, 1.0);
    std::vector<scenario::SystemState> states;
    for (std::size_t i = 0; i < n; ++i) states.push_back({{static_cast<int>(i) + 1, static_cast<int>(i % 3)}, scenario::EnvClass::Obj});
    std::vector<std::vector<chain::Edge>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 1 == n || pick(rng) % 5 == 0) {
            rows[i].push_back({i, 1.0});
            continue;
        }
        std::vector<std::size_t> targets;
        for (int d = degree(rng); d > 0; --d) {
            const auto t = pick(rng);
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        std::vector<double> w;
        double total = 0.0;
        for (std::size_t t = 0; t < targets.size(); ++t) total += w.emplace_back(weight(rng));
        double used = 0.0;
        for (std::size_t t = 0; t + 1 < targets.size(); ++t) {
            rows[i].push_back({targets[t], w[t] / total});
            used += w[t] / total;
        }
        rows[i].push_back({targets.back(), 1.0 - used});
    }
    return {scenario::EnvClass::Obj, std::move(states), std::move(rows)};
}

}  // namespace testsupport
