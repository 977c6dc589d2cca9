#include "percheck/engine.h"

#include <cmath>
#include <deque>
#include <sstream>

#include "percheck/error.h"

namespace percheck::engine {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::Linear: return "linear";
        case Method::Iterate: return "iterate";
        case Method::Enumerate: return "enumerate";
        case Method::Simulate: return "simulate";
    }
    return "?";
}

Method method_from_string(std::string_view name) {
    for (auto m : {Method::Linear, Method::Iterate, Method::Enumerate, Method::Simulate}) {
        if (to_string(m) == name) return m;
    }
    throw Error(Errc::ConfigError, "unknown engine '" + std::string(name) + "' (expected linear, iterate, enumerate or simulate)");
}

double checked_probability(double p) {
    constexpr double slack = 1e-12;
    if (!(p >= -slack && p <= 1.0 + slack)) {
        std::ostringstream os;
        os.precision(17);
        os << "probability " << p << " outside [0,1]";
        throw Error(Errc::NumericalError, os.str());
    }
    return std::min(1.0, std::max(0.0, p));
}

namespace {

void check_inputs(const MarkovChain& chain, std::size_t init, std::initializer_list<const StateSet*> sets) {
    if (init >= chain.size()) {
        throw Error(Errc::IndexOutOfRange, "initial state " + std::to_string(init) + " outside chain of " + std::to_string(chain.size()) + " states");
    }
    for (const StateSet* s : sets) {
        if (s->size() != chain.size()) throw Error(Errc::DimensionMismatch, "state set size does not match the chain");
    }
}

std::vector<std::vector<std::size_t>> predecessors(const MarkovChain& chain) {
    std::vector<std::vector<std::size_t>> preds(chain.size());
    for (std::size_t s = 0; s < chain.size(); ++s) {
        for (const auto& e : chain.successors(s)) {
            if (e.probability > 0.0) preds[e.target].push_back(s);
        }
    }
    return preds;
}

// States from which `from` is reachable using only intermediate states in `through`.
StateSet backward_closure(const std::vector<std::vector<std::size_t>>& preds, const StateSet& from, const StateSet& through) {
    StateSet seen = from;
    std::deque<std::size_t> queue;
    for (std::size_t s = 0; s < from.size(); ++s) {
        if (from[s]) queue.push_back(s);
    }
    while (!queue.empty()) {
        const std::size_t x = queue.front();
        queue.pop_front();
        for (std::size_t p : preds[x]) {
            if (!seen[p] && through[p]) {
                seen[p] = true;
                queue.push_back(p);
            }
        }
    }
    return seen;
}

struct Partition {
    StateSet zero;
    StateSet one;
};

// Graph pre-pass for guard U goal: probability-0 and probability-1 states.
Partition qualitative(const MarkovChain& chain, const StateSet& guard, const StateSet& goal) {
    const auto preds = predecessors(chain);
    const std::size_t n = chain.size();
    StateSet continuing(n);
    for (std::size_t s = 0; s < n; ++s) continuing[s] = guard[s] && !goal[s];

    Partition part;
    part.zero = backward_closure(preds, goal, continuing);
    part.zero.flip();
    StateSet not_one = backward_closure(preds, part.zero, continuing);
    part.one = not_one;
    part.one.flip();
    return part;
}

struct ReducedSystem {
    std::vector<std::size_t> states;                               // reduced index -> chain index
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // x = A x + b over reduced indices
    std::vector<double> rhs;
};

ReducedSystem reduce(const MarkovChain& chain, const Partition& part) {
    const std::size_t n = chain.size();
    ReducedSystem sys;
    std::vector<std::size_t> local(n, n);
    for (std::size_t s = 0; s < n; ++s) {
        if (!part.zero[s] && !part.one[s]) {
            local[s] = sys.states.size();
            sys.states.push_back(s);
        }
    }
    sys.rows.resize(sys.states.size());
    sys.rhs.assign(sys.states.size(), 0.0);
    for (std::size_t i = 0; i < sys.states.size(); ++i) {
        for (const auto& e : chain.successors(sys.states[i])) {
            if (part.one[e.target]) {
                sys.rhs[i] += e.probability;
            } else if (local[e.target] != n) {
                sys.rows[i].push_back({local[e.target], e.probability});
            }
        }
    }
    return sys;
}

double residual_of(const ReducedSystem& sys, const std::vector<double>& x) {
    double r = 0.0;
    for (std::size_t i = 0; i < sys.rows.size(); ++i) {
        double v = sys.rhs[i];
        for (const auto& [j, p] : sys.rows[i]) v += p * x[j];
        r = std::max(r, std::abs(v - x[i]));
    }
    return r;
}

// Sparse Gaussian elimination on (I - A) x = b in breadth-first order, which keeps the factor close to
// upper triangular for closed-loop chains. No pivoting: after the pre-pass the matrix is a nonsingular M-matrix.
std::vector<double> solve_elimination(const ReducedSystem& sys) {
    const std::size_t m = sys.states.size();
    std::vector<std::map<std::size_t, double>> rows(m);
    std::vector<std::vector<std::size_t>> column_rows(m);
    std::vector<double> b = sys.rhs;
    for (std::size_t i = 0; i < m; ++i) {
        rows[i][i] += 1.0;
        for (const auto& [j, p] : sys.rows[i]) rows[i][j] -= p;
        for (const auto& [j, v] : rows[i]) {
            if (j < i) column_rows[j].push_back(i);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double pivot = rows[i][i];
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            throw Error(Errc::SingularSystem, "zero pivot at state " + std::to_string(sys.states[i]));
        }
        for (std::size_t j : column_rows[i]) {
            auto it = rows[j].find(i);
            if (it == rows[j].end() || it->second == 0.0) continue;
            const double factor = it->second / pivot;
            rows[j].erase(it);
            for (const auto& [c, v] : rows[i]) {
                if (c <= i) continue;
                auto [slot, inserted] = rows[j].emplace(c, 0.0);
                slot->second -= factor * v;
                if (inserted && c < j) column_rows[c].push_back(j);
            }
            b[j] -= factor * b[i];
        }
    }
    std::vector<double> x(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        double v = b[i];
        for (const auto& [c, coeff] : rows[i]) {
            if (c > i) v -= coeff * x[c];
        }
        x[i] = v / rows[i][i];
    }
    return x;
}

std::vector<double> solve_iterative(const ReducedSystem& sys, const EngineConfig& cfg, std::size_t& iterations, double& residual) {
    const std::size_t m = sys.states.size();
    std::vector<double> x(m, 0.0);
    std::vector<double> next(m, 0.0);
    iterations = 0;
    residual = 0.0;
    if (m == 0) return x;
    while (true) {
        residual = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double v = sys.rhs[i];
            for (const auto& [j, p] : sys.rows[i]) v += p * x[j];
            next[i] = v;
            residual = std::max(residual, std::abs(v - x[i]));
        }
        x.swap(next);
        ++iterations;
        if (residual < cfg.tolerance) return x;
        if (iterations >= cfg.max_iterations) {
            std::ostringstream os;
            os << "value iteration stopped after " << iterations << " iterations with residual " << residual;
            throw Error(Errc::NonConvergence, os.str());
        }
    }
}

}  // namespace

CheckResult prob_until(const MarkovChain& chain, const StateSet& guard, const StateSet& goal, std::size_t init, const EngineConfig& cfg) {
    check_inputs(chain, init, {&guard, &goal});
    if (!(cfg.tolerance > 0.0)) throw Error(Errc::ConfigError, "tolerance must be positive");
    CheckResult result;
    result.engine = cfg.method == Method::Iterate ? Method::Iterate : Method::Linear;

    const Partition part = qualitative(chain, guard, goal);
    if (part.zero[init] || part.one[init]) {
        result.probability = part.one[init] ? 1.0 : 0.0;
        return result;
    }
    const ReducedSystem sys = reduce(chain, part);
    std::vector<double> x;
    if (result.engine == Method::Iterate) {
        x = solve_iterative(sys, cfg, result.iterations, result.residual);
    } else {
        x = solve_elimination(sys);
        result.iterations = 1;
        result.residual = residual_of(sys, x);
    }
    const auto pos = std::lower_bound(sys.states.begin(), sys.states.end(), init) - sys.states.begin();
    result.probability = checked_probability(x[static_cast<std::size_t>(pos)]);
    return result;
}

CheckResult prob_reach(const MarkovChain& chain, const StateSet& target, std::size_t init, const EngineConfig& cfg) {
    return prob_until(chain, StateSet(chain.size(), true), target, init, cfg);
}

CheckResult prob_invariant(const MarkovChain& chain, const StateSet& safe, std::size_t init, const EngineConfig& cfg) {
    check_inputs(chain, init, {&safe});
    if (!safe[init]) {
        CheckResult r;
        r.engine = cfg.method == Method::Iterate ? Method::Iterate : Method::Linear;
        r.probability = 0.0;
        return r;
    }
    StateSet unsafe = safe;
    unsafe.flip();
    CheckResult r = prob_reach(chain, unsafe, init, cfg);
    r.probability = checked_probability(1.0 - r.probability);
    return r;
}

CheckResult prob_bounded(const MarkovChain& chain, BoundedKind kind, const StateSet& guard, const StateSet& body, unsigned bound,
                         std::size_t init, const EngineConfig& cfg) {
    check_inputs(chain, init, {&body});
    if (kind == BoundedKind::Until) check_inputs(chain, init, {&guard});
    const std::size_t n = chain.size();
    // x holds the probability of satisfying the bounded property within the remaining number of steps.
    std::vector<double> x(n);
    for (std::size_t s = 0; s < n; ++s) x[s] = body[s] ? 1.0 : 0.0;
    std::vector<double> next(n);
    for (unsigned step = 0; step < bound; ++step) {
        for (std::size_t s = 0; s < n; ++s) {
            double v = 0.0;
            for (const auto& e : chain.successors(s)) v += e.probability * x[e.target];
            switch (kind) {
                case BoundedKind::Invariant: next[s] = body[s] ? v : 0.0; break;
                case BoundedKind::Reach: next[s] = body[s] ? 1.0 : v; break;
                case BoundedKind::Until: next[s] = body[s] ? 1.0 : (guard[s] ? v : 0.0); break;
            }
        }
        x.swap(next);
    }
    CheckResult r;
    r.engine = cfg.method == Method::Iterate ? Method::Iterate : Method::Linear;
    r.iterations = bound;
    r.probability = checked_probability(x[init]);
    return r;
}

CheckResult prob_next(const MarkovChain& chain, const StateSet& target, std::size_t init, const EngineConfig& cfg) {
    check_inputs(chain, init, {&target});
    CheckResult r;
    r.engine = cfg.method == Method::Iterate ? Method::Iterate : Method::Linear;
    double p = 0.0;
    for (const auto& e : chain.successors(init)) {
        if (target[e.target]) p += e.probability;
    }
    r.probability = checked_probability(p);
    r.iterations = 1;
    return r;
}

CheckResult check(const MarkovChain& chain, const logic::Formula& f, std::size_t init, const EngineConfig& cfg) {
    if (cfg.method == Method::Enumerate) {
        auto r = enumerate_paths(chain, f, init, cfg.horizon, cfg.path_budget);
        return r;
    }
    if (cfg.method == Method::Simulate) return simulate(chain, f, init, cfg);

    const logic::LabeledSets sets = logic::label_chain(chain, f);
    using logic::FragmentClass;
    switch (sets.shape.kind) {
        case FragmentClass::Invariant: return prob_invariant(chain, sets.body, init, cfg);
        case FragmentClass::Reach: return prob_reach(chain, sets.body, init, cfg);
        case FragmentClass::Until: return prob_until(chain, sets.guard, sets.body, init, cfg);
        case FragmentClass::Next: return prob_next(chain, sets.body, init, cfg);
        case FragmentClass::BoundedInvariant:
            return prob_bounded(chain, BoundedKind::Invariant, sets.guard, sets.body, sets.shape.bound, init, cfg);
        case FragmentClass::BoundedReach:
            return prob_bounded(chain, BoundedKind::Reach, sets.guard, sets.body, sets.shape.bound, init, cfg);
        case FragmentClass::BoundedUntil:
            return prob_bounded(chain, BoundedKind::Until, sets.guard, sets.body, sets.shape.bound, init, cfg);
        case FragmentClass::Unsupported: break;
    }
    throw Error(Errc::UnsupportedFragment, "formula outside the checkable fragment (" + sets.shape.unsupported_at + ")");
}

CheckResult weighted_check(const std::map<scenario::EnvClass, MarkovChain>& chains, const logic::Formula& f,
                           const scenario::AgentState& init, const std::array<double, 3>& env_dist, const EngineConfig& cfg) {
    double total = 0.0;
    for (double w : env_dist) {
        if (!std::isfinite(w) || w < 0.0) throw Error(Errc::DistributionNotNormalized, "environment weights must be non-negative");
        total += w;
    }
    if (std::abs(total - 1.0) > confusion::kStochasticTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "environment distribution sums to " << total;
        throw Error(Errc::DistributionNotNormalized, os.str());
    }
    CheckResult out;
    out.engine = cfg.method;
    for (auto env : scenario::kEnvClasses) {
        const double w = env_dist[static_cast<std::size_t>(env)];
        if (w == 0.0) continue;
        auto it = chains.find(env);
        if (it == chains.end()) {
            throw Error(Errc::ConfigError, "no chain for environment class " + std::string(scenario::to_string(env)));
        }
        const auto idx = it->second.find({init, env});
        if (!idx) throw Error(Errc::InvalidState, "initial state " + scenario::to_string(init) + " not in the chain");
        const CheckResult r = check(it->second, f, *idx, cfg);
        out.probability += w * r.probability;
        out.residual = std::max(out.residual, r.residual);
        out.iterations += r.iterations;
        out.truncated = out.truncated || r.truncated;
    }
    out.probability = checked_probability(out.probability);
    return out;
}

}  // namespace percheck::engine
