#include "percheck/scenario.h"

#include <algorithm>
#include <deque>
#include <map>

#include "percheck/error.h"
#include "percheck/logic.h"

namespace percheck::scenario {

namespace {

std::size_t dense(int cell, int speed, int v_max) {
    return static_cast<std::size_t>(cell - 1) * static_cast<std::size_t>(v_max + 1) + static_cast<std::size_t>(speed);
}

std::vector<AgentState> raw_successors(int n, int v_max, const AgentState& s) {
    const int next_cell = std::min(n, s.cell + s.speed);
    if (s.speed == 0) return {{s.cell, 0}, {s.cell, 1}};
    if (s.speed == v_max) return {{next_cell, v_max - 1}, {next_cell, v_max}};
    return {{next_cell, s.speed - 1}, {next_cell, s.speed}, {next_cell, s.speed + 1}};
}

// Backward search from (k-1, 0). Intermediate states may not rest before C_{k-1} and may not move past the
// sidewalk; everything else is pruned by the dynamics (positions never decrease).
std::vector<bool> compute_stoppable(int n, int k, int v_max) {
    const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(v_max + 1);
    const int stop = k - 1;
    auto allowed = [&](const AgentState& s) {
        if (s.speed == 0 && s.cell < stop) return false;
        if (s.cell >= k && s.speed > 0) return false;
        return true;
    };
    std::vector<std::vector<std::size_t>> preds(count);
    std::vector<AgentState> by_index(count);
    for (int cell = 1; cell <= n; ++cell) {
        for (int v = 0; v <= v_max; ++v) {
            const AgentState s{cell, v};
            by_index[dense(cell, v, v_max)] = s;
            if (!allowed(s)) continue;
            for (const auto& t : raw_successors(n, v_max, s)) preds[dense(t.cell, t.speed, v_max)].push_back(dense(cell, v, v_max));
        }
    }
    std::vector<bool> good(count, false);
    std::deque<std::size_t> queue;
    const std::size_t target = dense(stop, 0, v_max);
    good[target] = true;
    queue.push_back(target);
    while (!queue.empty()) {
        const std::size_t x = queue.front();
        queue.pop_front();
        for (std::size_t p : preds[x]) {
            if (!good[p]) {
                good[p] = true;
                queue.push_back(p);
            }
        }
    }
    return good;
}

AgentState coast(const ScenarioParams& params, const AgentState& s) {
    if (s.speed == 0) return {s.cell, 1};
    return {clamp_pos(params, s.cell, s.speed), s.speed};
}

}  // namespace

std::string_view to_string(EnvClass env) noexcept {
    switch (env) {
        case EnvClass::Ped: return "ped";
        case EnvClass::Obj: return "obj";
        case EnvClass::Empty: return "empty";
    }
    return "?";
}

EnvClass env_from_string(std::string_view name) {
    for (auto e : kEnvClasses) {
        if (to_string(e) == name) return e;
    }
    throw Error(Errc::ConfigError, "unknown environment class '" + std::string(name) + "' (expected ped, obj or empty)");
}

std::string_view to_string(StopSemantics s) noexcept { return s == StopSemantics::Absorb ? "absorb" : "restart"; }

StopSemantics semantics_from_string(std::string_view name) {
    if (name == "absorb") return StopSemantics::Absorb;
    if (name == "restart") return StopSemantics::Restart;
    throw Error(Errc::ConfigError, "unknown stop semantics '" + std::string(name) + "' (expected absorb or restart)");
}

std::string to_string(const AgentState& s) { return "(" + std::to_string(s.cell) + "," + std::to_string(s.speed) + ")"; }

ScenarioParams::ScenarioParams(int road_length, int sidewalk_cell, int v_max, StopSemantics semantics)
    : road_length_(road_length), sidewalk_cell_(sidewalk_cell), v_max_(v_max), semantics_(semantics) {
    if (v_max < 1) throw Error(Errc::InfeasibleScenario, "v_max must be at least 1, got " + std::to_string(v_max));
    if (sidewalk_cell < 2 || sidewalk_cell > road_length) {
        throw Error(Errc::InfeasibleScenario,
                    "sidewalk cell k=" + std::to_string(sidewalk_cell) + " must satisfy 2 <= k <= N=" + std::to_string(road_length));
    }
    const auto good = compute_stoppable(road_length, sidewalk_cell, v_max);
    for (int v = 1; v <= v_max; ++v) {
        if (!good[dense(1, v, v_max)]) {
            throw Error(Errc::InfeasibleScenario, "no trajectory from (1," + std::to_string(v) + ") stops at C_" +
                                                      std::to_string(stop_cell()) + " (N=" + std::to_string(road_length) +
                                                      ", k=" + std::to_string(sidewalk_cell) + ", v_max=" + std::to_string(v_max) + ")");
        }
    }
}

bool ScenarioParams::contains(const AgentState& s) const noexcept {
    return s.cell >= 1 && s.cell <= road_length_ && s.speed >= 0 && s.speed <= v_max_;
}

void ScenarioParams::require(const AgentState& s) const {
    if (!contains(s)) {
        throw Error(Errc::InvalidState, "agent state " + to_string(s) + " outside cells 1.." + std::to_string(road_length_) +
                                            ", speeds 0.." + std::to_string(v_max_));
    }
}

std::size_t ScenarioParams::state_count() const noexcept {
    return static_cast<std::size_t>(road_length_) * static_cast<std::size_t>(v_max_ + 1);
}

std::size_t ScenarioParams::dense_index(const AgentState& s) const noexcept { return dense(s.cell, s.speed, v_max_); }

ScenarioParams ScenarioParams::with_semantics(StopSemantics s) const {
    ScenarioParams copy = *this;
    copy.semantics_ = s;
    return copy;
}

int clamp_pos(const ScenarioParams& params, int cell, int speed) { return std::min(params.road_length(), cell + speed); }

std::vector<AgentState> successors_dyn(const ScenarioParams& params, const AgentState& s) {
    params.require(s);
    return raw_successors(params.road_length(), params.v_max(), s);
}

StoppableSet::StoppableSet(const ScenarioParams& params)
    : params_(params), member_(compute_stoppable(params.road_length(), params.sidewalk_cell(), params.v_max())) {}

bool StoppableSet::contains(const AgentState& s) const {
    params_.require(s);
    return member_[params_.dense_index(s)];
}

bool stoppable(const ScenarioParams& params, const AgentState& s) { return StoppableSet(params).contains(s); }

AgentState controller_obj(const ScenarioParams& params, const AgentState& s) {
    params.require(s);
    if (s.speed == 0) return {s.cell, 1};
    return {clamp_pos(params, s.cell, s.speed), std::max(1, s.speed - 1)};
}

AgentState controller_empty(const ScenarioParams& params, const AgentState& s) {
    params.require(s);
    if (s.speed == 0) return {s.cell, 1};
    return {clamp_pos(params, s.cell, s.speed), std::min(params.v_max(), s.speed + 1)};
}

std::string_view to_string(PedPolicy p) noexcept { return p == PedPolicy::Slowest ? "slowest" : "fastest"; }

PedPolicy ped_policy_from_string(std::string_view name) {
    if (name == "slowest") return PedPolicy::Slowest;
    if (name == "fastest") return PedPolicy::Fastest;
    throw Error(Errc::ConfigError, "unknown ped policy '" + std::string(name) + "' (expected slowest or fastest)");
}

AgentState controller_ped(const ScenarioParams& params, const StoppableSet& safe, const AgentState& s, PedPolicy policy) {
    params.require(s);
    if (s == params.stop_state()) return s;
    if (!safe.contains(s)) {
        throw Error(Errc::NoSafeSuccessor, "state " + to_string(s) + " cannot stop at C_" + std::to_string(params.stop_cell()));
    }
    auto succ = successors_dyn(params, s);
    if (policy == PedPolicy::Fastest) std::reverse(succ.begin(), succ.end());
    for (const auto& next : succ) {
        if (safe.contains(next)) return next;
    }
    throw Error(Errc::NoSafeSuccessor, "no stoppable successor of " + to_string(s));
}

AgentState controller_ped(const ScenarioParams& params, const AgentState& s, PedPolicy policy) {
    return controller_ped(params, StoppableSet(params), s, policy);
}

ProbabilisticController ProbabilisticController::point_mass(Controller k) {
    return ProbabilisticController([k = std::move(k)](const AgentState& s, EnvClass y) {
        return std::vector<Successor>{{k.step(s, y), 1.0}};
    });
}

Controller make_controller(const ScenarioParams& params, PedPolicy policy) {
    auto safe = std::make_shared<const StoppableSet>(params);
    return Controller([params, safe, policy](const AgentState& s, EnvClass observed) -> AgentState {
        params.require(s);
        if (s == params.stop_state()) {
            if (params.semantics() == StopSemantics::Absorb || observed == EnvClass::Ped) return s;
        }
        if (s.cell >= params.sidewalk_cell()) return coast(params, s);
        switch (observed) {
            case EnvClass::Ped:
                if (safe->contains(s)) return controller_ped(params, *safe, s, policy);
                return controller_obj(params, s);
            case EnvClass::Obj:
                return controller_obj(params, s);
            case EnvClass::Empty:
                return controller_empty(params, s);
        }
        return s;
    });
}

std::string spec_not_stop_without_ped(const ScenarioParams& params) {
    const auto stop = std::to_string(params.stop_cell());
    return "G(env=ped | !(cell=" + stop + " & speed=0))";
}

std::string spec_stop_for_ped(const ScenarioParams& params) {
    const auto stop = std::to_string(params.stop_cell());
    return "G(!(env=ped) | !(cell>=" + stop + ") | (cell=" + stop + " & speed=0))";
}

std::string spec_no_early_stop(const ScenarioParams& params) {
    return "G(!(cell<=" + std::to_string(params.stop_cell() - 1) + " & speed=0))";
}

std::string expand_named_spec(const std::string& text, const ScenarioParams& params) {
    if (text == "phi1") return spec_not_stop_without_ped(params);
    if (text == "phi2") return spec_stop_for_ped(params);
    if (text == "phi3") return spec_no_early_stop(params);
    return text;
}

ControllerReport verify_controller(const ScenarioParams& params, PedPolicy policy) {
    const Controller k = make_controller(params, policy);
    const std::vector<std::pair<std::string, logic::Formula>> specs = {
        {"phi1", logic::parse(spec_not_stop_without_ped(params))},
        {"phi2", logic::parse(spec_stop_for_ped(params))},
        {"phi3", logic::parse(spec_no_early_stop(params))},
    };
    ControllerReport report;
    for (auto env : kEnvClasses) {
        for (int v0 = 1; v0 <= params.v_max(); ++v0) {
            ++report.runs;
            // Deterministic closed loop; it becomes periodic once a state repeats.
            std::vector<AgentState> trace;
            std::map<AgentState, std::size_t> seen;
            AgentState s{1, v0};
            std::size_t loop_start = 0;
            for (;;) {
                seen.emplace(s, trace.size());
                trace.push_back(s);
                const bool terminal = s.cell == params.road_length() ||
                                      (params.semantics() == StopSemantics::Absorb && s == params.stop_state());
                const AgentState next = terminal ? s : k.step(s, env);
                auto it = seen.find(next);
                if (it != seen.end()) {
                    loop_start = it->second;
                    break;
                }
                s = next;
            }
            auto atom = [&](std::size_t pos, const logic::AtomicPredicate& a) {
                return logic::eval_atom(SystemState{trace[pos], env}, a);
            };
            auto fail = [&](const std::string& prop, const std::string& detail) {
                report.violations.push_back({env, v0, prop, detail});
            };
            for (const auto& [name, f] : specs) {
                if (!logic::eval_lasso(f, trace.size(), loop_start, atom)) fail(name, "violated on perfect-perception run");
            }
            const AgentState last = trace.back();
            switch (env) {
                case EnvClass::Ped:
                    if (last != params.stop_state() || loop_start != trace.size() - 1) {
                        fail("ped-stops", "run ends at " + to_string(last) + " instead of resting at the stop cell");
                    }
                    break;
                case EnvClass::Obj:
                    for (const auto& t : trace) {
                        if (t.speed == 0 && t.cell < params.road_length()) {
                            fail("obj-keeps-moving", "speed 0 at " + to_string(t));
                            break;
                        }
                    }
                    break;
                case EnvClass::Empty: {
                    auto first = std::find_if(trace.begin(), trace.end(), [&](const AgentState& t) { return t.speed == params.v_max(); });
                    if (first == trace.end()) {
                        fail("empty-reaches-vmax", "never reaches v_max");
                    } else if (std::any_of(first, trace.end(), [&](const AgentState& t) { return t.speed != params.v_max(); })) {
                        fail("empty-reaches-vmax", "drops below v_max after reaching it");
                    } else if (last.cell != params.road_length()) {
                        fail("empty-reaches-vmax", "does not reach the end of the road");
                    }
                    break;
                }
            }
            for (std::size_t i = 1; i < trace.size(); ++i) {
                if (trace[i].cell < trace[i - 1].cell) fail("monotone-position", "position decreases at step " + std::to_string(i));
            }
        }
    }
    return report;
}

}  // namespace percheck::scenario
