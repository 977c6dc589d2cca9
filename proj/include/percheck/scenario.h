#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace percheck::scenario {

/// True (and observed) class of the object next to the sidewalk. Order matches confusion::env_labels().
enum class EnvClass : std::uint8_t { Ped = 0, Obj = 1, Empty = 2 };

inline constexpr std::array<EnvClass, 3> kEnvClasses = {EnvClass::Ped, EnvClass::Obj, EnvClass::Empty};

std::string_view to_string(EnvClass env) noexcept;
/// Throws ConfigError for names other than ped/obj/empty.
EnvClass env_from_string(std::string_view name);

/// What happens once the car is stopped in front of the sidewalk.
enum class StopSemantics {
    Absorb,   ///< the stopped state is terminal
    Restart,  ///< obj/empty observations accelerate the stopped car again
};

std::string_view to_string(StopSemantics s) noexcept;
StopSemantics semantics_from_string(std::string_view name);

struct AgentState {
    int cell = 1;
    int speed = 0;

    auto operator<=>(const AgentState&) const = default;
};

struct SystemState {
    AgentState agent;
    EnvClass env = EnvClass::Ped;

    auto operator<=>(const SystemState&) const = default;
};

std::string to_string(const AgentState& s);

/// Road C_1..C_N, sidewalk next to C_k, stopping cell C_{k-1}, speeds 0..v_max.
class ScenarioParams {
   public:
    /// Throws InfeasibleScenario when bounds are violated or some start (C_1, v0) cannot stop at C_{k-1}.
    ScenarioParams(int road_length, int sidewalk_cell, int v_max, StopSemantics semantics = StopSemantics::Absorb);

    int road_length() const noexcept { return road_length_; }
    int sidewalk_cell() const noexcept { return sidewalk_cell_; }
    int stop_cell() const noexcept { return sidewalk_cell_ - 1; }
    int v_max() const noexcept { return v_max_; }
    StopSemantics semantics() const noexcept { return semantics_; }

    AgentState stop_state() const noexcept { return {stop_cell(), 0}; }
    bool contains(const AgentState& s) const noexcept;
    /// Throws InvalidState when !contains(s).
    void require(const AgentState& s) const;

    /// Dense index over all (cell, speed) pairs.
    std::size_t state_count() const noexcept;
    std::size_t dense_index(const AgentState& s) const noexcept;

    ScenarioParams with_semantics(StopSemantics s) const;

   private:
    int road_length_;
    int sidewalk_cell_;
    int v_max_;
    StopSemantics semantics_;
};

/// min(N, i + v).
int clamp_pos(const ScenarioParams& params, int cell, int speed);

/// Dynamics-respecting successors, ordered by increasing speed.
std::vector<AgentState> successors_dyn(const ScenarioParams& params, const AgentState& s);

/// Agent states from which the car can still come to rest exactly at C_{k-1} without stopping earlier or
/// passing the sidewalk. Computed once by a backward search over the (cell, speed) graph.
class StoppableSet {
   public:
    explicit StoppableSet(const ScenarioParams& params);

    bool contains(const AgentState& s) const;

   private:
    ScenarioParams params_;
    std::vector<bool> member_;
};

bool stoppable(const ScenarioParams& params, const AgentState& s);

/// Slow down to speed 1 and hold it; accelerate to 1 from rest.
AgentState controller_obj(const ScenarioParams& params, const AgentState& s);
/// Speed up to v_max and hold it.
AgentState controller_empty(const ScenarioParams& params, const AgentState& s);
/// Which stoppable successor the ped controller picks.
enum class PedPolicy {
    Slowest,  ///< brake toward speed 1, then stop at C_{k-1}
    Fastest,  ///< keep the highest speed that can still stop at C_{k-1}
};

std::string_view to_string(PedPolicy p) noexcept;
PedPolicy ped_policy_from_string(std::string_view name);

/// Stoppable successor chosen by `policy`; holds the stop at C_{k-1}.
/// Throws NoSafeSuccessor when s is not stoppable.
AgentState controller_ped(const ScenarioParams& params, const AgentState& s, PedPolicy policy = PedPolicy::Slowest);
AgentState controller_ped(const ScenarioParams& params, const StoppableSet& safe, const AgentState& s,
                          PedPolicy policy = PedPolicy::Slowest);

using Successor = std::pair<AgentState, double>;

/// Observation-dispatched deterministic controller K(s, y).
class Controller {
   public:
    using StepFn = std::function<AgentState(const AgentState&, EnvClass)>;

    explicit Controller(StepFn step) : step_(std::move(step)) {}

    AgentState step(const AgentState& s, EnvClass observed) const { return step_(s, observed); }

   private:
    StepFn step_;
};

/// Probabilistic controller: K(s, y) is a distribution over successor agent states.
class ProbabilisticController {
   public:
    using StepFn = std::function<std::vector<Successor>(const AgentState&, EnvClass)>;

    explicit ProbabilisticController(StepFn step) : step_(std::move(step)) {}
    /// Point-mass lift of a deterministic controller.
    static ProbabilisticController point_mass(Controller k);

    std::vector<Successor> step_dist(const AgentState& s, EnvClass observed) const { return step_(s, observed); }

   private:
    StepFn step_;
};

/// Dispatches on the observation: ped -> controller_ped (controller_obj when the car can no longer stop),
/// obj -> controller_obj, empty -> controller_empty. Past the sidewalk every branch coasts at its current
/// speed; at the stop state the behavior follows params.semantics().
Controller make_controller(const ScenarioParams& params, PedPolicy policy = PedPolicy::Slowest);

struct ControllerViolation {
    EnvClass env;
    int v0;
    std::string property;
    std::string detail;
};

struct ControllerReport {
    std::size_t runs = 0;
    std::vector<ControllerViolation> violations;

    bool all_pass() const noexcept { return violations.empty(); }
};

/// Runs the closed loop under perfect perception for every env class and start (C_1, v0), 1 <= v0 <= v_max,
/// and checks the three sidewalk specifications plus the per-class behavioral expectations on each run.
ControllerReport verify_controller(const ScenarioParams& params, PedPolicy policy = PedPolicy::Slowest);

/// Formula text of the sidewalk specifications for the given scenario.
std::string spec_not_stop_without_ped(const ScenarioParams& params);  // phi1
std::string spec_stop_for_ped(const ScenarioParams& params);          // phi2
std::string spec_no_early_stop(const ScenarioParams& params);         // phi3

/// Expands "phi1" / "phi2" / "phi3"; any other text is returned unchanged.
std::string expand_named_spec(const std::string& text, const ScenarioParams& params);

}  // namespace percheck::scenario
