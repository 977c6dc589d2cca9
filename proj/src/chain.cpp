#include "percheck/chain.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "percheck/error.h"

namespace percheck::chain {

MarkovChain::MarkovChain(EnvClass env, std::vector<SystemState> states, std::vector<std::vector<Edge>> rows, Labels labels)
    : env_(env), states_(std::move(states)), labels_(std::move(labels)) {
    if (rows.size() != states_.size()) {
        throw Error(Errc::FormatError, "chain has " + std::to_string(states_.size()) + " states but " + std::to_string(rows.size()) + " rows");
    }
    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (const auto& e : rows[i]) {
            if (e.target >= states_.size()) {
                throw Error(Errc::FormatError, "edge " + std::to_string(i) + " -> " + std::to_string(e.target) + " points outside the chain");
            }
            if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
                throw Error(Errc::FormatError, "edge " + std::to_string(i) + " -> " + std::to_string(e.target) + " has probability outside [0,1]");
            }
            edges_.push_back(e);
        }
        offsets_.push_back(edges_.size());
    }
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i].env != env_) {
            throw Error(Errc::EnvMismatch, "state " + std::to_string(i) + " carries env " + std::string(scenario::to_string(states_[i].env)) +
                                               " in a chain built for " + std::string(scenario::to_string(env_)));
        }
        if (!index_.emplace(states_[i], i).second) {
            throw Error(Errc::FormatError, "duplicate state " + scenario::to_string(states_[i].agent) + " in chain");
        }
    }
    for (auto& [name, members] : labels_) {
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (!members.empty() && members.back() >= states_.size()) {
            throw Error(Errc::FormatError, "label '" + name + "' references a state outside the chain");
        }
    }
}

std::span<const Edge> MarkovChain::successors(std::size_t i) const {
    if (i >= size()) throw Error(Errc::IndexOutOfRange, "state index " + std::to_string(i) + " out of range");
    return {edges_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

double MarkovChain::probability(std::size_t from, std::size_t to) const {
    double p = 0.0;
    for (const auto& e : successors(from)) {
        if (e.target == to) p += e.probability;
    }
    return p;
}

std::optional<std::size_t> MarkovChain::find(const SystemState& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool MarkovChain::is_absorbing(std::size_t i) const {
    auto row = successors(i);
    return row.size() == 1 && row[0].target == i && row[0].probability == 1.0;
}

bool MarkovChain::has_label(std::size_t i, const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) return false;
    return std::binary_search(it->second.begin(), it->second.end(), i);
}

std::vector<std::vector<Edge>> MarkovChain::rows() const {
    std::vector<std::vector<Edge>> out(size());
    for (std::size_t i = 0; i < size(); ++i) {
        auto row = successors(i);
        out[i].assign(row.begin(), row.end());
    }
    return out;
}

bool MarkovChain::operator==(const MarkovChain& other) const {
    return env_ == other.env_ && states_ == other.states_ && offsets_ == other.offsets_ && edges_ == other.edges_ &&
           labels_ == other.labels_;
}

std::size_t env_column(const confusion::ConfusionMatrix& cm, EnvClass env) { return cm.index_of(scenario::to_string(env)); }

std::vector<EnvClass> observation_set(const scenario::Controller& k, const SystemState& s1, const SystemState& s2) {
    std::vector<EnvClass> out;
    for (auto y : scenario::kEnvClasses) {
        if (k.step(s1.agent, y) == s2.agent) out.push_back(y);
    }
    return out;
}

double transition_probability(const scenario::Controller& k, const confusion::ConfusionMatrix& cm, EnvClass x_e,
                              const SystemState& s1, const SystemState& s2) {
    if (s1.env != x_e || s2.env != x_e) {
        throw Error(Errc::EnvMismatch, "transition between states of environment " + std::string(scenario::to_string(s1.env)) + " and " +
                                           std::string(scenario::to_string(s2.env)) + " under true class " +
                                           std::string(scenario::to_string(x_e)));
    }
    const std::size_t column = env_column(cm, x_e);
    double p = 0.0;
    for (auto y : observation_set(k, s1, s2)) p += cm(env_column(cm, y), column);
    return p;
}

Labels standard_labels(const scenario::ScenarioParams& params, const std::vector<SystemState>& states) {
    Labels labels;
    if (!states.empty()) labels["init"].push_back(0);
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& a = states[i].agent;
        if (a == params.stop_state()) labels["stopped"].push_back(i);
        if (a.cell == params.road_length()) labels["road_end"].push_back(i);
        labels["env_" + std::string(scenario::to_string(states[i].env))].push_back(i);
        labels["at_cell_" + std::to_string(a.cell)].push_back(i);
        labels["speed_" + std::to_string(a.speed)].push_back(i);
    }
    return labels;
}

namespace {

bool absorbing_by_convention(const scenario::ScenarioParams& params, const AgentState& a) {
    if (a.cell == params.road_length()) return true;
    return params.semantics() == scenario::StopSemantics::Absorb && a == params.stop_state();
}

// Breadth-first closure from init. `expand(agent, emit)` reports (successor, mass) pairs for one state.
template <typename Expand>
MarkovChain build_closure(const scenario::ScenarioParams& params, EnvClass x_e, const AgentState& init, Expand&& expand) {
    params.require(init);
    std::vector<SystemState> states;
    std::vector<std::vector<Edge>> rows;
    std::map<AgentState, std::size_t> index;
    std::deque<std::size_t> queue;

    auto intern = [&](const AgentState& a) {
        auto [it, inserted] = index.emplace(a, states.size());
        if (inserted) {
            states.push_back({a, x_e});
            rows.emplace_back();
            queue.push_back(it->second);
        }
        return it->second;
    };

    intern(init);
    while (!queue.empty()) {
        const std::size_t so = queue.front();
        queue.pop_front();
        const AgentState agent = states[so].agent;
        if (absorbing_by_convention(params, agent)) {
            rows[so] = {{so, 1.0}};
            continue;
        }
        std::vector<Edge> row;
        expand(agent, [&](const AgentState& succ, double mass) {
            if (mass == 0.0) return;
            params.require(succ);
            const std::size_t sf = intern(succ);
            auto it = std::find_if(row.begin(), row.end(), [&](const Edge& e) { return e.target == sf; });
            if (it == row.end()) {
                row.push_back({sf, mass});
            } else {
                it->probability += mass;
            }
        });
        rows[so] = std::move(row);
    }

    for (std::size_t i = 0; i < rows.size(); ++i) {
        double sum = 0.0;
        for (const auto& e : rows[i]) sum += e.probability;
        if (std::abs(sum - 1.0) > confusion::kStochasticTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "row of state " << scenario::to_string(states[i].agent) << " sums to " << sum;
            throw Error(Errc::StochasticityViolation, os.str());
        }
        // A single accumulated edge can land one ulp above 1.
        for (auto& e : rows[i]) e.probability = std::min(e.probability, 1.0);
    }
    auto labels = standard_labels(params, states);
    return MarkovChain(x_e, std::move(states), std::move(rows), std::move(labels));
}

}  // namespace

MarkovChain build_markov_chain(const scenario::ScenarioParams& params, const scenario::Controller& k,
                               const confusion::ConfusionMatrix& cm, EnvClass x_e, const AgentState& init) {
    const std::size_t column = env_column(cm, x_e);
    std::array<double, 3> mass{};
    for (auto y : scenario::kEnvClasses) mass[static_cast<std::size_t>(y)] = cm(env_column(cm, y), column);

    return build_closure(params, x_e, init, [&](const AgentState& so, auto&& emit) {
        for (auto y : scenario::kEnvClasses) {
            const double p = mass[static_cast<std::size_t>(y)];
            if (p == 0.0) continue;
            emit(k.step(so, y), p);
        }
    });
}

MarkovChain build_markov_chain_prob(const scenario::ScenarioParams& params, const scenario::ProbabilisticController& k,
                                    const confusion::ConfusionMatrix& cm, EnvClass x_e, const AgentState& init) {
    const std::size_t column = env_column(cm, x_e);
    std::array<double, 3> mass{};
    for (auto y : scenario::kEnvClasses) mass[static_cast<std::size_t>(y)] = cm(env_column(cm, y), column);

    return build_closure(params, x_e, init, [&](const AgentState& so, auto&& emit) {
        for (auto y : scenario::kEnvClasses) {
            const double p = mass[static_cast<std::size_t>(y)];
            if (p == 0.0) continue;
            double total = 0.0;
            const auto dist = k.step_dist(so, y);
            for (const auto& [succ, q] : dist) {
                if (!(q >= 0.0 && q <= 1.0)) {
                    throw Error(Errc::StochasticityViolation, "controller probability outside [0,1] at " + scenario::to_string(so));
                }
                total += q;
            }
            if (std::abs(total - 1.0) > confusion::kStochasticTolerance) {
                throw Error(Errc::StochasticityViolation, "controller distribution at " + scenario::to_string(so) + " for observation " +
                                                              std::string(scenario::to_string(y)) + " does not sum to 1");
            }
            for (const auto& [succ, q] : dist) emit(succ, p * q);
        }
    });
}

MarkovChain make_absorbing(const MarkovChain& chain, const std::function<bool(const SystemState&)>& predicate) {
    auto rows = chain.rows();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (predicate(chain.state(i))) rows[i] = {{i, 1.0}};
    }
    return MarkovChain(chain.env(), chain.states(), std::move(rows), chain.labels());
}

MarkovChain restrict_reachable(const MarkovChain& chain, std::size_t init) {
    if (init >= chain.size()) throw Error(Errc::IndexOutOfRange, "initial state index out of range");
    std::vector<std::size_t> remap(chain.size(), chain.size());
    std::vector<std::size_t> order;
    std::deque<std::size_t> queue{init};
    remap[init] = 0;
    order.push_back(init);
    while (!queue.empty()) {
        const std::size_t s = queue.front();
        queue.pop_front();
        for (const auto& e : chain.successors(s)) {
            if (remap[e.target] == chain.size()) {
                remap[e.target] = order.size();
                order.push_back(e.target);
                queue.push_back(e.target);
            }
        }
    }
    std::vector<SystemState> states;
    std::vector<std::vector<Edge>> rows;
    for (std::size_t old : order) {
        states.push_back(chain.state(old));
        std::vector<Edge> row;
        for (const auto& e : chain.successors(old)) row.push_back({remap[e.target], e.probability});
        rows.push_back(std::move(row));
    }
    Labels labels;
    for (const auto& [name, members] : chain.labels()) {
        if (name == "init") continue;
        std::vector<std::size_t> out;
        for (std::size_t old : members) {
            if (remap[old] != chain.size()) out.push_back(remap[old]);
        }
        if (!out.empty()) labels[name] = std::move(out);
    }
    if (chain.labels().count("init")) labels["init"] = {0};
    return MarkovChain(chain.env(), std::move(states), std::move(rows), std::move(labels));
}

StochasticReport validate_stochastic(const MarkovChain& chain, double tolerance) {
    StochasticReport report;
    report.row_sums.reserve(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        double sum = 0.0;
        for (const auto& e : chain.successors(i)) sum += e.probability;
        report.row_sums.push_back(sum);
        const double dev = std::abs(sum - 1.0);
        report.max_deviation = std::max(report.max_deviation, dev);
        if (dev > tolerance) report.bad_rows.push_back(i);
    }
    report.pass = report.bad_rows.empty();
    return report;
}

}  // namespace percheck::chain
