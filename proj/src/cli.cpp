#include "percheck/cli.h"

#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "percheck/chain.h"
#include "percheck/confusion.h"
#include "percheck/engine.h"
#include "percheck/io.h"
#include "percheck/logic.h"
#include "percheck/scenario.h"
#include "percheck/sweep.h"

namespace percheck::cli {

int exit_code_for(Errc code) noexcept {
    switch (code) {
        case Errc::ParseError: return kParse;
        case Errc::IoError:
        case Errc::FormatError: return kIo;
        case Errc::NonConvergence:
        case Errc::SingularSystem:
        case Errc::NumericalError:
        case Errc::UnsupportedFragment:
        case Errc::DistributionNotNormalized:
        case Errc::BudgetExceeded:
        case Errc::HorizonRequired:
        case Errc::EnvMismatch:
        case Errc::StochasticityViolation:
        case Errc::NoSafeSuccessor: return kEngine;
        default: return kConfig;
    }
}

namespace {

using nlohmann::json;

struct Globals {
    double tol = 1e-12;
    std::string engine = "linear";
    std::string semantics;
    std::uint64_t seed = engine::EngineConfig{}.seed;
};

struct Source {
    std::string scenario;
    std::string cm = "cm1";
    std::vector<double> pr;
};

std::string fixed9(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9f", x);
    return buf;
}

engine::EngineConfig make_config(const Globals& g) {
    engine::EngineConfig cfg;
    cfg.tolerance = g.tol;
    cfg.method = engine::method_from_string(g.engine);
    cfg.seed = g.seed;
    return cfg;
}

confusion::ConfusionMatrix resolve_cm(const Source& src) {
    if (!src.pr.empty()) {
        if (src.pr.size() != 2) throw Error(Errc::ConfigError, "--pr expects p,r");
        return confusion::from_precision_recall(src.pr[0], src.pr[1]);
    }
    if (src.cm == "cm1") return confusion::cm1();
    if (src.cm == "identity") return confusion::identity(confusion::env_labels());
    return io::load_confusion(src.cm);
}

io::ScenarioConfig resolve_scenario(const Source& src, const Globals& g) {
    auto sc = io::load_scenario(src.scenario);
    if (!g.semantics.empty()) sc.semantics = scenario::semantics_from_string(g.semantics);
    return sc;
}

chain::MarkovChain build(const io::ScenarioConfig& sc, const confusion::ConfusionMatrix& cm) {
    const auto params = sc.params();
    return chain::build_markov_chain(params, scenario::make_controller(params, sc.ped_policy), cm, sc.env, sc.init());
}

json result_json(const engine::CheckResult& r) {
    json j;
    j["probability"] = r.probability;
    j["engine"] = std::string(engine::to_string(r.engine));
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    if (r.ci_low) j["ci_low"] = *r.ci_low;
    if (r.ci_high) j["ci_high"] = *r.ci_high;
    if (r.truncated) j["truncated"] = true;
    return j;
}

void add_source(CLI::App* cmd, Source& src, bool need_scenario) {
    auto* opt = cmd->add_option("--scenario", src.scenario, "scenario JSON file");
    if (need_scenario) opt->required();
    cmd->add_option("--cm", src.cm, "confusion matrix: cm1, identity or a JSON file")->capture_default_str();
    cmd->add_option("--pr", src.pr, "precision,recall pair for CM(p,r)")->delimiter(',')->expected(2);
}

void report_error(const Error& e, std::ostream& err, const std::string& formula) {
    err << "error: [" << errc_module(e.code()) << "] " << errc_name(e.code()) << ": " << e.what() << '\n';
    if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
        err << "  at offset " << pe->offset() << '\n';
        if (!formula.empty()) err << "  " << formula << "\n  " << std::string(pe->offset(), ' ') << "^\n";
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Closed-loop perception/controller probabilistic checker", "percheck"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--tol", g.tol, "solver tolerance")->capture_default_str();
    app.add_option("--engine", g.engine, "linear|iterate|enumerate|simulate")->capture_default_str();
    app.add_option("--semantics", g.semantics, "absorb|restart (overrides the scenario file)");
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();
    app.fallthrough();

    Source src;
    std::string formula = "phi1";
    std::size_t samples = engine::EngineConfig{}.samples;
    std::optional<std::size_t> horizon;
    unsigned workers = 0;

    auto* check = app.add_subcommand("check", "probability that the closed loop satisfies a formula");
    add_source(check, src, true);
    check->add_option("--formula", formula, "formula text or phi1|phi2|phi3")->capture_default_str();
    check->add_option("--samples", samples, "samples for --engine simulate");
    check->add_option("--horizon", horizon, "step cap for simulate/enumerate");

    std::string sweep_file, sweep_out;
    unsigned threads = 0;
    bool timing = false;
    auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a parameter grid and write CSV");
    sweep_cmd->add_option("spec", sweep_file, "sweep JSON file")->required();
    sweep_cmd->add_option("--out", sweep_out, "override the output path");
    sweep_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    sweep_cmd->add_flag("--timing", timing, "fill wall_time_ms");

    std::string format = "explicit", prefix;
    auto* export_cmd = app.add_subcommand("export", "write the chain as explicit files, PRISM or DOT");
    add_source(export_cmd, src, true);
    export_cmd->add_option("--format", format, "explicit|prism|dot")->check(CLI::IsMember({"explicit", "prism", "dot"}))->capture_default_str();
    export_cmd->add_option("--out", prefix, "output prefix")->required();

    std::string import_prefix, import_formula;
    auto* import_cmd = app.add_subcommand("import", "read an explicit .tra/.lab/.sta triple");
    import_cmd->add_option("prefix", import_prefix, "file prefix")->required();
    import_cmd->add_option("--formula", import_formula, "formula to check from state 0");

    std::string class_name = "ped";
    std::vector<double> sizes;
    auto* metrics = app.add_subcommand("metrics", "precision and recall of one class");
    add_source(metrics, src, false);
    metrics->add_option("--class", class_name, "class label")->capture_default_str();
    metrics->add_option("--sizes", sizes, "class sizes, one per label")->delimiter(',');

    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate with a confidence interval");
    add_source(simulate_cmd, src, true);
    simulate_cmd->add_option("--formula", formula, "formula text or phi1|phi2|phi3")->capture_default_str();
    simulate_cmd->add_option("--samples", samples, "number of runs")->capture_default_str();
    simulate_cmd->add_option("--horizon", horizon, "step cap per run");
    simulate_cmd->add_option("--workers", workers, "threads (0 = all cores)");

    int road = 65, sidewalk = 57, vmax = 0;
    std::string policy = "slowest";
    auto* verify = app.add_subcommand("verify-controller", "check the controller under perfect perception");
    verify->add_option("--N", road, "road length")->capture_default_str();
    verify->add_option("--k", sidewalk, "sidewalk cell")->capture_default_str();
    verify->add_option("--v-max", vmax, "maximum speed")->required();
    verify->add_option("--ped-policy", policy, "slowest|fastest")->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    std::string shown_formula;
    try {
        if (check->parsed() || simulate_cmd->parsed()) {
            const auto sc = resolve_scenario(src, g);
            const auto cm = resolve_cm(src);
            auto cfg = make_config(g);
            cfg.samples = samples;
            cfg.horizon = horizon;
            cfg.workers = workers;
            if (simulate_cmd->parsed()) cfg.method = engine::Method::Simulate;
            shown_formula = scenario::expand_named_spec(formula, sc.params());
            const auto f = logic::parse(shown_formula);
            const auto chain = build(sc, cm);
            const auto r = engine::check(chain, f, 0, cfg);
            auto j = result_json(r);
            j["chain_states"] = chain.size();
            j["formula"] = logic::to_string(f);
            out << fixed9(r.probability) << '\n';
            if (r.ci_low) out << "ci95 [" << fixed9(*r.ci_low) << ", " << fixed9(*r.ci_high) << "]\n";
            out << j.dump() << '\n';
        } else if (sweep_cmd->parsed()) {
            auto spec = sweep::load_sweep(sweep_file);
            if (!g.engine.empty() && app.count("--engine")) spec.engine.method = engine::method_from_string(g.engine);
            if (app.count("--tol")) spec.engine.tolerance = g.tol;
            if (app.count("--seed")) spec.engine.seed = g.seed;
            if (!g.semantics.empty()) spec.semantics = scenario::semantics_from_string(g.semantics);
            if (!sweep_out.empty()) spec.output = sweep_out;
            spec.timing = spec.timing || timing;
            const auto rows = sweep::run_sweep(spec, threads);
            std::size_t failed = 0;
            for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
            for (const auto& path : sweep::write_outputs(spec, rows)) out << "wrote " << path << '\n';
            out << rows.size() << " rows, " << failed << " failed\n";
        } else if (export_cmd->parsed()) {
            const auto chain = build(resolve_scenario(src, g), resolve_cm(src));
            if (format == "explicit") {
                io::export_explicit(chain, prefix);
                out << "wrote " << prefix << ".tra " << prefix << ".lab " << prefix << ".sta\n";
            } else {
                const std::string path = prefix + (format == "prism" ? ".pm" : ".dot");
                io::write_file(path, format == "prism" ? io::to_prism(chain) : io::to_dot(chain));
                out << "wrote " << path << '\n';
            }
        } else if (import_cmd->parsed()) {
            const auto chain = io::import_explicit(import_prefix);
            out << "states " << chain.size() << " transitions " << chain.transition_count() << " env "
                << scenario::to_string(chain.env()) << '\n';
            if (!import_formula.empty()) {
                shown_formula = import_formula;
                const auto r = engine::check(chain, logic::parse(import_formula), 0, make_config(g));
                out << fixed9(r.probability) << '\n' << result_json(r).dump() << '\n';
            }
        } else if (metrics->parsed()) {
            const auto cm = resolve_cm(src);
            const auto i = cm.index_of(class_name);
            out << "class " << class_name << '\n';
            if (sizes.empty()) {
                out << "precision_size_weighted n/a (pass --sizes to weight classes)\n";
            } else {
                out << "precision_size_weighted " << fixed9(confusion::precision_size_weighted(cm, i, confusion::ClassSizes(sizes))) << '\n';
            }
            out << "precision_standard " << fixed9(confusion::precision_standard(cm, i)) << '\n';
            out << "recall " << fixed9(confusion::recall(cm, i)) << '\n';
        } else if (verify->parsed()) {
            const scenario::ScenarioParams params(road, sidewalk, vmax);
            const auto report = scenario::verify_controller(params, scenario::ped_policy_from_string(policy));
            out << "runs " << report.runs << " violations " << report.violations.size() << '\n';
            for (const auto& v : report.violations) {
                out << "  " << scenario::to_string(v.env) << " v0=" << v.v0 << ' ' << v.property << ": " << v.detail << '\n';
            }
            return report.all_pass() ? kOk : kFailed;
        }
    } catch (const Error& e) {
        report_error(e, err, shown_formula);
        return exit_code_for(e.code());
    }
    return kOk;
}

}  // namespace percheck::cli
