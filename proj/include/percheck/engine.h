#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "percheck/chain.h"
#include "percheck/logic.h"

namespace percheck::engine {

using chain::MarkovChain;
using StateSet = std::vector<bool>;

enum class Method { Linear, Iterate, Enumerate, Simulate };

std::string_view to_string(Method m) noexcept;
Method method_from_string(std::string_view name);

struct EngineConfig {
    double tolerance = 1e-12;
    std::size_t max_iterations = 1'000'000;
    std::size_t samples = 100'000;
    std::uint64_t seed = 20210811;
    /// Step cap for simulation and enumeration of unbounded formulas; results become step-bounded.
    std::optional<std::size_t> horizon;
    Method method = Method::Linear;
    /// Upper bound on path prefixes visited by enumerate_paths.
    std::size_t path_budget = 20'000'000;
    /// Simulation threads; 0 picks the hardware concurrency.
    unsigned workers = 0;
};

struct CheckResult {
    double probability = 0.0;
    Method engine = Method::Linear;
    /// Max solver residual for exact engines, normal-approximation 95% half-width for simulation.
    double residual = 0.0;
    /// Solver iterations, enumerated path prefixes, or samples.
    std::size_t iterations = 0;
    /// 95% interval for simulation; Clopper-Pearson when the frequency is 0 or 1.
    std::optional<double> ci_low;
    std::optional<double> ci_high;
    /// Some run or path was cut at cfg.horizon.
    bool truncated = false;
};

/// Probability of eventually entering `target` from `init`.
CheckResult prob_reach(const MarkovChain& chain, const StateSet& target, std::size_t init, const EngineConfig& cfg = {});

/// Probability of staying in `safe` forever: 1 - P(reach complement).
CheckResult prob_invariant(const MarkovChain& chain, const StateSet& safe, std::size_t init, const EngineConfig& cfg = {});

/// Probability of `guard U goal`.
CheckResult prob_until(const MarkovChain& chain, const StateSet& guard, const StateSet& goal, std::size_t init,
                       const EngineConfig& cfg = {});

enum class BoundedKind { Invariant, Reach, Until };

/// Step-bounded variants by n matrix-vector products. For Invariant and Reach the guard is ignored.
CheckResult prob_bounded(const MarkovChain& chain, BoundedKind kind, const StateSet& guard, const StateSet& body, unsigned bound,
                         std::size_t init, const EngineConfig& cfg = {});

/// One-step probability of entering `target`.
CheckResult prob_next(const MarkovChain& chain, const StateSet& target, std::size_t init, const EngineConfig& cfg = {});

/// Dispatches on classify(f) and cfg.method. Throws UnsupportedFragment outside the fragment.
CheckResult check(const MarkovChain& chain, const logic::Formula& f, std::size_t init, const EngineConfig& cfg = {});

/// sum_e dist(e) * check(chain_e, f, init). Chains are looked up by env; zero-weight classes may be missing.
CheckResult weighted_check(const std::map<scenario::EnvClass, MarkovChain>& chains, const logic::Formula& f,
                           const scenario::AgentState& init, const std::array<double, 3>& env_dist, const EngineConfig& cfg = {});

/// Sums cylinder probabilities (products of edge probabilities) over finite paths from `init`, each
/// stopped as soon as its outcome is settled. Independent of the equation solvers.
CheckResult enumerate_paths(const MarkovChain& chain, const logic::Formula& f, std::size_t init,
                            std::optional<std::size_t> horizon = std::nullopt, std::size_t budget = EngineConfig{}.path_budget);

/// Monte Carlo estimate with a seeded generator. Results do not depend on the worker count.
CheckResult simulate(const MarkovChain& chain, const logic::Formula& f, std::size_t init, const EngineConfig& cfg = {});

/// Clamps values within 1e-12 of [0,1]; throws NumericalError for larger excursions.
double checked_probability(double p);

}  // namespace percheck::engine
