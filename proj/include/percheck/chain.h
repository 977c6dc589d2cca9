#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percheck/confusion.h"
#include "percheck/scenario.h"

namespace percheck::chain {

using scenario::AgentState;
using scenario::EnvClass;
using scenario::SystemState;

struct Edge {
    std::size_t target = 0;
    double probability = 0.0;

    bool operator==(const Edge&) const = default;
};

/// Atomic-proposition name -> sorted state indices.
using Labels = std::map<std::string, std::vector<std::size_t>>;

/// Finite DTMC over system states. Rows are stored compressed; edge order is insertion order.
///
/// The constructor only checks structure (indices and probability range). Row sums are checked by
/// validate_stochastic() and enforced by the builders.
class MarkovChain {
   public:
    MarkovChain(EnvClass env, std::vector<SystemState> states, std::vector<std::vector<Edge>> rows, Labels labels = {});

    std::size_t size() const noexcept { return states_.size(); }
    std::size_t transition_count() const noexcept { return edges_.size(); }
    EnvClass env() const noexcept { return env_; }

    const SystemState& state(std::size_t i) const { return states_.at(i); }
    const std::vector<SystemState>& states() const noexcept { return states_; }
    std::span<const Edge> successors(std::size_t i) const;
    double probability(std::size_t from, std::size_t to) const;

    std::optional<std::size_t> find(const SystemState& s) const;

    /// Only edge is a probability-1 self-loop.
    bool is_absorbing(std::size_t i) const;

    const Labels& labels() const noexcept { return labels_; }
    bool has_label(std::size_t i, const std::string& name) const;

    std::vector<std::vector<Edge>> rows() const;

    bool operator==(const MarkovChain& other) const;

   private:
    EnvClass env_;
    std::vector<SystemState> states_;
    std::vector<std::size_t> offsets_;
    std::vector<Edge> edges_;
    Labels labels_;
    std::map<SystemState, std::size_t> index_;
};

/// O(s1, s2): observations y with K(s1, y) = s2.
std::vector<EnvClass> observation_set(const scenario::Controller& k, const SystemState& s1, const SystemState& s2);

/// Sum of C(y, x_e) over O(s1, s2). Throws EnvMismatch when either state carries another env.
double transition_probability(const scenario::Controller& k, const confusion::ConfusionMatrix& cm, EnvClass x_e,
                              const SystemState& s1, const SystemState& s2);

/// Column index of `env` in `cm`, by label name.
std::size_t env_column(const confusion::ConfusionMatrix& cm, EnvClass env);

/// Closed-loop chain reachable from (init, x_e). Road-end states (and the stop state under absorb semantics)
/// become absorbing. States are indexed in breadth-first discovery order, so index 0 is the initial state.
MarkovChain build_markov_chain(const scenario::ScenarioParams& params, const scenario::Controller& k,
                               const confusion::ConfusionMatrix& cm, EnvClass x_e, const AgentState& init);

/// Same construction with a probabilistic controller: mass C(y, x_e) * K(s, y)(s') accumulates on s -> s'.
MarkovChain build_markov_chain_prob(const scenario::ScenarioParams& params, const scenario::ProbabilisticController& k,
                                    const confusion::ConfusionMatrix& cm, EnvClass x_e, const AgentState& init);

/// Labels attached by the builders: init, stopped, road_end, env_<class>, at_cell_<i>, speed_<v>.
Labels standard_labels(const scenario::ScenarioParams& params, const std::vector<SystemState>& states);

/// Replaces the rows of matching states by a probability-1 self-loop.
MarkovChain make_absorbing(const MarkovChain& chain, const std::function<bool(const SystemState&)>& predicate);

/// Sub-chain reachable from `init`, re-indexed breadth-first along edge order. Labels are remapped and
/// "init" is reset to the new index 0.
MarkovChain restrict_reachable(const MarkovChain& chain, std::size_t init);

struct StochasticReport {
    bool pass = true;
    double max_deviation = 0.0;
    std::vector<double> row_sums;
    std::vector<std::size_t> bad_rows;
};

StochasticReport validate_stochastic(const MarkovChain& chain, double tolerance = confusion::kStochasticTolerance);

}  // namespace percheck::chain
