#include <deque>
#include <vector>

#include "percheck/engine.h"
#include "percheck/error.h"

namespace percheck::engine {

namespace {

using logic::FragmentClass;

enum class Verdict { Open, Sat, Viol };

std::vector<bool> evaluate(const MarkovChain& chain, const logic::Formula& f) {
    std::vector<bool> out(chain.size());
    for (std::size_t s = 0; s < chain.size(); ++s) out[s] = logic::eval_prop(chain, s, f);
    return out;
}

// States that can reach `to` through states in `via` (targets included).
std::vector<bool> can_reach(const MarkovChain& chain, const std::vector<bool>& to, const std::vector<bool>& via) {
    const std::size_t n = chain.size();
    std::vector<std::vector<std::size_t>> preds(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& e : chain.successors(s)) {
            if (e.probability > 0.0) preds[e.target].push_back(s);
        }
    }
    std::vector<bool> mark = to;
    std::deque<std::size_t> todo;
    for (std::size_t s = 0; s < n; ++s) {
        if (to[s]) todo.push_back(s);
    }
    while (!todo.empty()) {
        const auto x = todo.front();
        todo.pop_front();
        for (auto p : preds[x]) {
            if (!mark[p] && via[p]) {
                mark[p] = true;
                todo.push_back(p);
            }
        }
    }
    return mark;
}

struct Settled {
    std::vector<bool> sat;
    std::vector<bool> viol;
};

// Until(guard, goal): a state is settled when satisfaction is certain or impossible from it.
Settled settle_until(const MarkovChain& chain, const std::vector<bool>& guard, const std::vector<bool>& goal) {
    const std::size_t n = chain.size();
    std::vector<bool> via(n);
    for (std::size_t s = 0; s < n; ++s) via[s] = guard[s] && !goal[s];
    Settled out;
    out.viol = can_reach(chain, goal, via);
    out.viol.flip();
    out.sat = can_reach(chain, out.viol, via);
    out.sat.flip();
    return out;
}

}  // namespace

CheckResult enumerate_paths(const MarkovChain& chain, const logic::Formula& f, std::size_t init, std::optional<std::size_t> horizon,
                            std::size_t budget) {
    if (init >= chain.size()) throw Error(Errc::IndexOutOfRange, "initial state outside the chain");
    const logic::Shape shape = logic::classify(f);
    if (shape.kind == FragmentClass::Unsupported) {
        throw Error(Errc::UnsupportedFragment, "formula outside the checkable fragment (" + shape.unsupported_at + ")");
    }
    const std::size_t n = chain.size();
    const auto guard = evaluate(chain, shape.guard);
    const auto body = evaluate(chain, shape.body);

    Settled settled;
    bool unbounded = false;
    switch (shape.kind) {
        case FragmentClass::Invariant: {
            // G body fails exactly when true U !body holds.
            std::vector<bool> bad = body;
            bad.flip();
            const Settled s = settle_until(chain, std::vector<bool>(n, true), bad);
            settled.sat = s.viol;
            settled.viol = s.sat;
            unbounded = true;
            break;
        }
        case FragmentClass::Reach: settled = settle_until(chain, std::vector<bool>(n, true), body); unbounded = true; break;
        case FragmentClass::Until: settled = settle_until(chain, guard, body); unbounded = true; break;
        default: break;
    }

    auto verdict = [&](std::size_t s, std::size_t depth) -> Verdict {
        switch (shape.kind) {
            case FragmentClass::Invariant:
            case FragmentClass::Reach:
            case FragmentClass::Until:
                if (settled.sat[s]) return Verdict::Sat;
                if (settled.viol[s]) return Verdict::Viol;
                return Verdict::Open;
            case FragmentClass::Next:
                if (depth == 0) return Verdict::Open;
                return body[s] ? Verdict::Sat : Verdict::Viol;
            case FragmentClass::BoundedInvariant:
                if (!body[s]) return Verdict::Viol;
                return depth >= shape.bound ? Verdict::Sat : Verdict::Open;
            case FragmentClass::BoundedReach:
                if (body[s]) return Verdict::Sat;
                return depth >= shape.bound ? Verdict::Viol : Verdict::Open;
            case FragmentClass::BoundedUntil:
                if (body[s]) return Verdict::Sat;
                if (!guard[s]) return Verdict::Viol;
                return depth >= shape.bound ? Verdict::Viol : Verdict::Open;
            case FragmentClass::Unsupported: break;
        }
        return Verdict::Viol;
    };

    struct Frame {
        std::size_t state;
        double mass;
        std::size_t depth;
    };
    CheckResult result;
    result.engine = Method::Enumerate;
    std::vector<Frame> stack{{init, 1.0, 0}};
    std::size_t visited = 0;
    double sat = 0.0;
    while (!stack.empty()) {
        const Frame fr = stack.back();
        stack.pop_back();
        if (++visited > budget) {
            throw Error(Errc::BudgetExceeded, "path enumeration exceeded " + std::to_string(budget) + " prefixes");
        }
        const Verdict v = verdict(fr.state, fr.depth);
        if (v == Verdict::Sat) {
            sat += fr.mass;
            continue;
        }
        if (v == Verdict::Viol) continue;
        if (unbounded && horizon && fr.depth >= *horizon) {
            // Read as the step-bounded property: an invariant held so far counts, an unmet goal does not.
            result.truncated = true;
            if (shape.kind == FragmentClass::Invariant) sat += fr.mass;
            continue;
        }
        const auto edges = chain.successors(fr.state);
        for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
            if (it->probability > 0.0) stack.push_back({it->target, fr.mass * it->probability, fr.depth + 1});
        }
    }
    result.iterations = visited;
    result.probability = checked_probability(sat);
    return result;
}

}  // namespace percheck::engine
