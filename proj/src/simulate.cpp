#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <thread>
#include <vector>

#include "percheck/engine.h"
#include "percheck/error.h"

namespace percheck::engine {

namespace {

using logic::FragmentClass;

constexpr std::size_t kChunk = 4096;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Every state reachable from init can reach an absorbing state.
bool terminates_almost_surely(const MarkovChain& chain, std::size_t init) {
    const std::size_t n = chain.size();
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<bool> reach_abs(n, false);
    std::deque<std::size_t> todo;
    for (std::size_t s = 0; s < n; ++s) {
        for (const auto& e : chain.successors(s)) {
            if (e.probability > 0.0) preds[e.target].push_back(s);
        }
        if (chain.is_absorbing(s)) {
            reach_abs[s] = true;
            todo.push_back(s);
        }
    }
    while (!todo.empty()) {
        const auto x = todo.front();
        todo.pop_front();
        for (auto p : preds[x]) {
            if (!reach_abs[p]) {
                reach_abs[p] = true;
                todo.push_back(p);
            }
        }
    }
    std::vector<bool> seen(n, false);
    seen[init] = true;
    todo.push_back(init);
    while (!todo.empty()) {
        const auto x = todo.front();
        todo.pop_front();
        if (!reach_abs[x]) return false;
        for (const auto& e : chain.successors(x)) {
            if (e.probability > 0.0 && !seen[e.target]) {
                seen[e.target] = true;
                todo.push_back(e.target);
            }
        }
    }
    return true;
}

}  // namespace

CheckResult simulate(const MarkovChain& chain, const logic::Formula& f, std::size_t init, const EngineConfig& cfg) {
    if (init >= chain.size()) throw Error(Errc::IndexOutOfRange, "initial state outside the chain");
    if (cfg.samples == 0) throw Error(Errc::ConfigError, "simulation needs at least one sample");
    const logic::Shape shape = logic::classify(f);
    if (shape.kind == FragmentClass::Unsupported) {
        throw Error(Errc::UnsupportedFragment, "formula outside the checkable fragment (" + shape.unsupported_at + ")");
    }
    const bool unbounded =
        shape.kind == FragmentClass::Invariant || shape.kind == FragmentClass::Reach || shape.kind == FragmentClass::Until;
    if (unbounded && !cfg.horizon && !terminates_almost_surely(chain, init)) {
        throw Error(Errc::HorizonRequired, "runs may never reach an absorbing state; set a horizon");
    }

    const std::size_t n = chain.size();
    std::vector<bool> guard(n), body(n), absorbing(n);
    for (std::size_t s = 0; s < n; ++s) {
        guard[s] = logic::eval_prop(chain, s, shape.guard);
        body[s] = logic::eval_prop(chain, s, shape.body);
        absorbing[s] = chain.is_absorbing(s);
    }
    const bool goal_is_reach = shape.kind == FragmentClass::Reach || shape.kind == FragmentClass::BoundedReach;

    // Returns 1 for a satisfying run, 0 otherwise; sets `cut` when stopped by the horizon.
    auto run = [&](std::mt19937_64& rng, bool& cut) -> int {
        std::size_t s = init;
        for (std::size_t depth = 0;; ++depth) {
            switch (shape.kind) {
                case FragmentClass::Invariant:
                case FragmentClass::BoundedInvariant:
                    if (!body[s]) return 0;
                    if (shape.kind == FragmentClass::BoundedInvariant && depth >= shape.bound) return 1;
                    if (absorbing[s]) return 1;
                    break;
                case FragmentClass::Reach:
                case FragmentClass::Until:
                case FragmentClass::BoundedReach:
                case FragmentClass::BoundedUntil:
                    if (body[s]) return 1;
                    if (!goal_is_reach && !guard[s]) return 0;
                    if (absorbing[s]) return 0;
                    if ((shape.kind == FragmentClass::BoundedReach || shape.kind == FragmentClass::BoundedUntil) && depth >= shape.bound)
                        return 0;
                    break;
                case FragmentClass::Next:
                    if (depth == 1) return body[s] ? 1 : 0;
                    break;
                case FragmentClass::Unsupported: return 0;
            }
            if (unbounded && cfg.horizon && depth >= *cfg.horizon) {
                cut = true;
                return shape.kind == FragmentClass::Invariant ? 1 : 0;
            }
            const double u = uniform01(rng);
            double acc = 0.0;
            const auto edges = chain.successors(s);
            std::size_t next = edges.back().target;
            for (const auto& e : edges) {
                acc += e.probability;
                if (u < acc) {
                    next = e.target;
                    break;
                }
            }
            s = next;
        }
    };

    const std::size_t chunks = (cfg.samples + kChunk - 1) / kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    std::vector<char> cut_flags(chunks, 0);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t c = cursor++; c < chunks; c = cursor++) {
            std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(c)));
            const std::size_t count = std::min(kChunk, cfg.samples - c * kChunk);
            bool cut = false;
            std::size_t h = 0;
            for (std::size_t i = 0; i < count; ++i) h += static_cast<std::size_t>(run(rng, cut));
            hits[c] = h;
            cut_flags[c] = cut ? 1 : 0;
        }
    };
    unsigned workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::size_t total = 0;
    for (auto h : hits) total += h;
    const double nd = static_cast<double>(cfg.samples);
    const double p = static_cast<double>(total) / nd;

    CheckResult r;
    r.engine = Method::Simulate;
    r.probability = p;
    r.iterations = cfg.samples;
    r.truncated = std::any_of(cut_flags.begin(), cut_flags.end(), [](char c) { return c != 0; });
    r.residual = 1.96 * std::sqrt(p * (1.0 - p) / nd);
    if (total == 0) {
        r.ci_low = 0.0;
        r.ci_high = 1.0 - std::pow(0.025, 1.0 / nd);
    } else if (total == cfg.samples) {
        r.ci_low = std::pow(0.025, 1.0 / nd);
        r.ci_high = 1.0;
    } else {
        r.ci_low = std::max(0.0, p - r.residual);
        r.ci_high = std::min(1.0, p + r.residual);
    }
    return r;
}

}  // namespace percheck::engine
