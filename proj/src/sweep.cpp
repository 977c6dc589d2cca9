#include "percheck/sweep.h"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "percheck/chain.h"
#include "percheck/error.h"
#include "percheck/io.h"
#include "percheck/logic.h"

namespace percheck::sweep {

using nlohmann::json;

const std::vector<std::pair<double, double>>& default_pr_pairs() {
    static const std::vector<std::pair<double, double>> pairs = {
        {0.95, 0.5}, {0.9, 0.6}, {0.85, 0.7}, {0.8, 0.8}, {0.7, 0.9}, {0.6, 0.95},
    };
    return pairs;
}

PointResult evaluate_point(const scenario::ScenarioParams& params, const scenario::AgentState& init, scenario::EnvClass env,
                           const confusion::ConfusionMatrix& cm, const std::string& formula, const engine::EngineConfig& cfg,
                           scenario::PedPolicy policy) {
    const logic::Formula f = logic::parse(scenario::expand_named_spec(formula, params));
    const auto k = scenario::make_controller(params, policy);
    const auto chain = chain::build_markov_chain(params, k, cm, env, init);
    return {engine::check(chain, f, 0, cfg), chain.size()};
}

namespace {

std::vector<int> int_range(const json& j, const char* key) {
    if (!j.contains(key)) throw Error(Errc::ConfigError, std::string("sweep: missing \"") + key + "\"");
    const json& v = j.at(key);
    std::vector<int> out;
    try {
        if (v.is_object()) {
            const int from = v.at("from").get<int>(), to = v.at("to").get<int>();
            for (int x = from; x <= to; ++x) out.push_back(x);
        } else {
            out = v.get<std::vector<int>>();
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, std::string("sweep: bad \"") + key + "\": " + e.what());
    }
    if (out.empty()) throw Error(Errc::ConfigError, std::string("sweep: empty \"") + key + "\" range");
    return out;
}

}  // namespace

SweepSpec parse_sweep_json(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, std::string("sweep: ") + e.what());
    }
    if (!j.is_object()) throw Error(Errc::ConfigError, "sweep: expected an object");
    SweepSpec s;
    try {
        s.road_length = j.value("N", s.road_length);
        s.sidewalk_cell = j.value("k", s.sidewalk_cell);
        s.v0 = int_range(j, "v0");
        s.v_max = int_range(j, "v_max");
        for (const auto& e : j.value("env", std::vector<std::string>{"ped", "obj", "empty"})) s.envs.push_back(scenario::env_from_string(e));
        if (s.envs.empty()) throw Error(Errc::ConfigError, "sweep: empty \"env\" list");

        if (j.contains("pr")) {
            const json& pr = j.at("pr");
            if (pr.is_string() && pr.get<std::string>() == "default") {
                s.pr_pairs = default_pr_pairs();
            } else {
                for (const auto& pair : pr) {
                    const auto v = pair.get<std::vector<double>>();
                    if (v.size() != 2) throw Error(Errc::ConfigError, "sweep: each pr entry must be [p, r]");
                    s.pr_pairs.emplace_back(v[0], v[1]);
                }
            }
            if (s.pr_pairs.empty()) throw Error(Errc::ConfigError, "sweep: empty \"pr\" list");
            for (const auto& [p, r] : s.pr_pairs) {
                if (!confusion::feasible_pair(p, r)) {
                    std::ostringstream os;
                    os << "sweep: infeasible precision/recall pair (" << p << ", " << r << ")";
                    throw Error(Errc::ConfigError, os.str());
                }
            }
        } else {
            const json cm = j.value("cm", json("cm1"));
            if (cm.is_object()) {
                s.cm = io::parse_confusion_json(cm.dump());
                s.cm_id = "inline";
            } else {
                const auto name = cm.get<std::string>();
                if (name == "cm1") {
                    s.cm = confusion::cm1();
                } else if (name == "identity") {
                    s.cm = confusion::identity(confusion::env_labels());
                } else {
                    std::filesystem::path path(name);
                    if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
                    s.cm = io::load_confusion(path);
                }
                s.cm_id = name;
            }
        }

        const json f = j.value("formula", json("phi2"));
        if (f.is_string()) {
            for (auto e : scenario::kEnvClasses) s.formula[e] = f.get<std::string>();
        } else {
            for (auto e : scenario::kEnvClasses) {
                const std::string key(scenario::to_string(e));
                if (f.contains(key)) s.formula[e] = f.at(key).get<std::string>();
            }
            for (auto e : s.envs) {
                if (!s.formula.count(e)) {
                    throw Error(Errc::ConfigError, "sweep: no formula for env " + std::string(scenario::to_string(e)));
                }
            }
        }
        if (j.contains("stop_semantics")) s.semantics = scenario::semantics_from_string(j.at("stop_semantics").get<std::string>());
        if (j.contains("ped_policy")) s.ped_policy = scenario::ped_policy_from_string(j.at("ped_policy").get<std::string>());
        if (j.contains("engine")) s.engine.method = engine::method_from_string(j.at("engine").get<std::string>());
        if (j.contains("tol")) s.engine.tolerance = j.at("tol").get<double>();
        if (j.contains("seed")) s.engine.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("samples")) s.engine.samples = j.at("samples").get<std::size_t>();
        if (j.contains("horizon")) s.engine.horizon = j.at("horizon").get<std::size_t>();
        s.output = j.value("output", std::string("sweep.csv"));
        s.split_by_env = j.value("split_by_env", false);
        s.timing = j.value("timing", false);
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, std::string("sweep: ") + e.what());
    }
    return s;
}

SweepSpec load_sweep(const std::string& path) {
    return parse_sweep_json(io::read_file(path), std::filesystem::path(path).parent_path().string());
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, unsigned threads) {
    if (spec.v0.empty() || spec.v_max.empty() || spec.envs.empty()) throw Error(Errc::ConfigError, "sweep: empty range");
    if (spec.pr_pairs.empty() && !spec.cm) throw Error(Errc::ConfigError, "sweep: neither a confusion matrix nor (p,r) pairs");

    struct Job {
        ResultRow row;
        std::size_t cm_slot;
    };
    std::vector<confusion::ConfusionMatrix> cms;
    std::vector<std::string> cm_names;
    if (spec.pr_pairs.empty()) {
        cms.push_back(*spec.cm);
        cm_names.push_back(spec.cm_id);
    } else {
        for (const auto& [p, r] : spec.pr_pairs) {
            cms.push_back(confusion::from_precision_recall(p, r));
            std::ostringstream os;
            os << "CM(" << p << ";" << r << ")";
            cm_names.push_back(os.str());
        }
    }

    std::vector<Job> jobs;
    for (auto env : spec.envs) {
        for (std::size_t c = 0; c < cms.size(); ++c) {
            for (int vm : spec.v_max) {
                for (int v0 : spec.v0) {
                    if (v0 > vm) continue;
                    Job job;
                    job.cm_slot = c;
                    job.row.env = env;
                    job.row.v0 = v0;
                    job.row.v_max = vm;
                    if (!spec.pr_pairs.empty()) {
                        job.row.p = spec.pr_pairs[c].first;
                        job.row.r = spec.pr_pairs[c].second;
                    }
                    job.row.cm = cm_names[c];
                    job.row.formula = spec.formula.at(env);
                    job.row.engine = std::string(engine::to_string(spec.engine.method));
                    jobs.push_back(std::move(job));
                }
            }
        }
    }
    if (jobs.empty()) throw Error(Errc::ConfigError, "sweep: no grid point has v0 <= v_max");

    auto work = [&](Job& job) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const scenario::ScenarioParams params(spec.road_length, spec.sidewalk_cell, job.row.v_max, spec.semantics);
            const auto res = evaluate_point(params, {1, job.row.v0}, job.row.env, cms[job.cm_slot], job.row.formula, spec.engine,
                                            spec.ped_policy);
            job.row.probability = res.result.probability;
            job.row.residual = res.result.residual;
            job.row.chain_states = res.chain_states;
        } catch (const Error& e) {
            job.row.error = std::string(errc_name(e.code())) + ": " + e.what();
        }
        if (spec.timing) {
            job.row.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        }
    };

    unsigned n = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) work(jobs[i]);
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<ResultRow> rows;
    rows.reserve(jobs.size());
    for (auto& j : jobs) rows.push_back(std::move(j.row));
    return rows;
}

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

std::string csv_header() { return "env,v0,v_max,p,r,cm,formula,probability,engine,residual,chain_states,wall_time_ms,error"; }

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << csv_header() << '\n';
    for (const auto& r : rows) {
        os << scenario::to_string(r.env) << ',' << r.v0 << ',' << r.v_max << ',' << (r.p ? num(*r.p) : "") << ','
           << (r.r ? num(*r.r) : "") << ',' << csv_field(r.cm) << ',' << csv_field(r.formula) << ','
           << (r.error.empty() ? num(r.probability) : "") << ',' << r.engine << ',' << (r.error.empty() ? num(r.residual) : "") << ','
           << (r.error.empty() ? std::to_string(r.chain_states) : "") << ',' << (r.wall_time_ms ? num(*r.wall_time_ms) : "") << ','
           << csv_field(r.error) << '\n';
    }
}

std::vector<std::string> write_outputs(const SweepSpec& spec, const std::vector<ResultRow>& rows) {
    std::vector<std::string> written;
    if (!spec.split_by_env) {
        std::ostringstream os;
        write_csv(os, rows);
        io::write_file(spec.output, os.str());
        written.push_back(spec.output);
        return written;
    }
    const std::filesystem::path out(spec.output);
    for (auto env : spec.envs) {
        std::vector<ResultRow> part;
        for (const auto& r : rows) {
            if (r.env == env) part.push_back(r);
        }
        std::ostringstream os;
        write_csv(os, part);
        const auto path = (out.parent_path() / (out.stem().string() + "_" + std::string(scenario::to_string(env)) + ".csv")).string();
        io::write_file(path, os.str());
        written.push_back(path);
    }
    return written;
}

}  // namespace percheck::sweep
