#include "percheck/io.h"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "percheck/error.h"

namespace percheck::io {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, std::string(what) + ": " + e.what());
    }
}

template <class T>
T field(const json& j, const char* key, const char* what) {
    if (!j.contains(key)) throw Error(Errc::ConfigError, std::string(what) + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, std::string(what) + ": bad \"" + key + "\": " + e.what());
    }
}

std::string format_error(const std::filesystem::path& file, std::size_t line, const std::string& msg) {
    return file.string() + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace

confusion::ConfusionMatrix parse_confusion_json(const std::string& text) {
    const json j = parse_json(text, "confusion matrix");
    if (!j.is_object()) throw Error(Errc::ConfigError, "confusion matrix: expected an object");
    auto labels = field<std::vector<std::string>>(j, "labels", "confusion matrix");
    const bool columns_true = j.value("columns_are_true_class", true);
    if (!j.contains("entries") || !j["entries"].is_array()) {
        throw Error(Errc::ConfigError, "confusion matrix: missing \"entries\" array");
    }
    std::vector<std::vector<confusion::Entry>> rows;
    for (const auto& row : j["entries"]) {
        if (!row.is_array()) throw Error(Errc::ConfigError, "confusion matrix: each row must be an array");
        auto& out = rows.emplace_back();
        for (const auto& cell : row) {
            if (cell.is_string()) {
                out.push_back(confusion::parse_entry(cell.get<std::string>()));
            } else if (cell.is_number()) {
                out.emplace_back(cell.get<double>());
            } else {
                throw Error(Errc::ConfigError, "confusion matrix: entries must be numbers or strings");
            }
        }
    }
    if (!columns_true) {
        std::vector<std::vector<confusion::Entry>> t(rows.empty() ? 0 : rows.front().size(), std::vector<confusion::Entry>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != t.size()) throw Error(Errc::DimensionMismatch, "confusion matrix rows differ in length");
            for (std::size_t c = 0; c < rows[i].size(); ++c) t[c][i] = rows[i][c];
        }
        rows = std::move(t);
    }
    return confusion::ConfusionMatrix::validate(std::move(rows), std::move(labels));
}

confusion::ConfusionMatrix load_confusion(const std::filesystem::path& path) { return parse_confusion_json(read_file(path)); }

scenario::ScenarioParams ScenarioConfig::params() const { return {road_length, sidewalk_cell, v_max, semantics}; }

ScenarioConfig parse_scenario_json(const std::string& text) {
    const json j = parse_json(text, "scenario");
    if (!j.is_object()) throw Error(Errc::ConfigError, "scenario: expected an object");
    ScenarioConfig c;
    c.road_length = field<int>(j, "N", "scenario");
    c.sidewalk_cell = field<int>(j, "k", "scenario");
    c.v_max = field<int>(j, "v_max", "scenario");
    c.v0 = field<int>(j, "v0", "scenario");
    if (j.contains("x0")) c.x0 = field<int>(j, "x0", "scenario");
    c.env = scenario::env_from_string(field<std::string>(j, "env", "scenario"));
    if (j.contains("stop_semantics")) c.semantics = scenario::semantics_from_string(field<std::string>(j, "stop_semantics", "scenario"));
    if (j.contains("ped_policy")) c.ped_policy = scenario::ped_policy_from_string(field<std::string>(j, "ped_policy", "scenario"));
    return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario_json(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << contents;
    if (!out.flush()) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::string format_exact(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_tra(std::ostream& os, const chain::MarkovChain& chain) {
    os << "STATES " << chain.size() << " TRANSITIONS " << chain.transition_count() << '\n';
    for (std::size_t s = 0; s < chain.size(); ++s) {
        for (const auto& e : chain.successors(s)) os << s << ' ' << e.target << ' ' << format_exact(e.probability) << '\n';
    }
}

void write_lab(std::ostream& os, const chain::MarkovChain& chain) {
    const auto& labels = chain.labels();
    std::vector<std::vector<std::size_t>> per_state(chain.size());
    std::size_t id = 0;
    bool first = true;
    for (const auto& [name, states] : labels) {
        os << (first ? "" : " ") << id << "=\"" << name << '"';
        first = false;
        for (auto s : states) per_state[s].push_back(id);
        ++id;
    }
    os << '\n';
    for (std::size_t s = 0; s < chain.size(); ++s) {
        if (per_state[s].empty()) continue;
        os << s << ':';
        for (auto l : per_state[s]) os << ' ' << l;
        os << '\n';
    }
}

void write_sta(std::ostream& os, const chain::MarkovChain& chain) {
    os << "(cell,speed)\n";
    for (std::size_t s = 0; s < chain.size(); ++s) {
        const auto& a = chain.state(s).agent;
        os << s << ":(" << a.cell << ',' << a.speed << ")\n";
    }
}

void export_explicit(const chain::MarkovChain& chain, const std::string& prefix) {
    std::ostringstream tra, lab, sta;
    write_tra(tra, chain);
    write_lab(lab, chain);
    write_sta(sta, chain);
    write_file(prefix + ".tra", tra.str());
    write_file(prefix + ".lab", lab.str());
    write_file(prefix + ".sta", sta.str());
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::FormatError, "missing or unreadable file " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

std::size_t parse_index(const std::string& tok, const std::filesystem::path& file, std::size_t line) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        if (tok.empty() || tok[0] == '-' || tok[0] == '+') throw std::invalid_argument(tok);
        v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != tok.size()) throw Error(Errc::FormatError, format_error(file, line, "expected an index, got '" + tok + "'"));
    return static_cast<std::size_t>(v);
}

}  // namespace

chain::MarkovChain import_explicit(const std::string& prefix) {
    const std::filesystem::path tra_path = prefix + ".tra", lab_path = prefix + ".lab", sta_path = prefix + ".sta";

    const auto sta = read_lines(sta_path);
    if (sta.empty() || sta[0] != "(cell,speed)") throw Error(Errc::FormatError, format_error(sta_path, 1, "expected header (cell,speed)"));
    std::vector<scenario::SystemState> states;
    std::vector<std::pair<int, int>> agents;
    for (std::size_t ln = 1; ln < sta.size(); ++ln) {
        if (blank(sta[ln])) continue;
        std::size_t idx = 0;
        int c = 0, v = 0;
        char tail = 0;
        unsigned long long raw = 0;
        if (std::sscanf(sta[ln].c_str(), "%llu:(%d,%d)%c", &raw, &c, &v, &tail) != 3) {
            throw Error(Errc::FormatError, format_error(sta_path, ln + 1, "expected i:(cell,speed)"));
        }
        idx = static_cast<std::size_t>(raw);
        if (idx != agents.size()) throw Error(Errc::FormatError, format_error(sta_path, ln + 1, "state indices must be consecutive from 0"));
        agents.emplace_back(c, v);
    }
    const std::size_t n = agents.size();

    const auto lab = read_lines(lab_path);
    if (lab.empty()) throw Error(Errc::FormatError, format_error(lab_path, 1, "missing label header"));
    std::vector<std::string> names;
    {
        std::istringstream hs(lab[0]);
        for (std::string tok; hs >> tok;) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || tok.size() < eq + 3 || tok[eq + 1] != '"' || tok.back() != '"') {
                throw Error(Errc::FormatError, format_error(lab_path, 1, "bad label declaration '" + tok + "'"));
            }
            if (parse_index(tok.substr(0, eq), lab_path, 1) != names.size()) {
                throw Error(Errc::FormatError, format_error(lab_path, 1, "label ids must be consecutive from 0"));
            }
            names.push_back(tok.substr(eq + 2, tok.size() - eq - 3));
        }
    }
    chain::Labels labels;
    for (std::size_t ln = 1; ln < lab.size(); ++ln) {
        if (blank(lab[ln])) continue;
        const auto colon = lab[ln].find(':');
        if (colon == std::string::npos) throw Error(Errc::FormatError, format_error(lab_path, ln + 1, "expected 'state: ids'"));
        const std::size_t s = parse_index(lab[ln].substr(0, colon), lab_path, ln + 1);
        if (s >= n) throw Error(Errc::FormatError, format_error(lab_path, ln + 1, "state index out of range"));
        std::istringstream ls(lab[ln].substr(colon + 1));
        for (std::string tok; ls >> tok;) {
            const std::size_t id = parse_index(tok, lab_path, ln + 1);
            if (id >= names.size()) throw Error(Errc::FormatError, format_error(lab_path, ln + 1, "unknown label id " + tok));
            labels[names[id]].push_back(s);
        }
    }
    std::optional<scenario::EnvClass> env;
    for (auto e : scenario::kEnvClasses) {
        if (labels.count("env_" + std::string(scenario::to_string(e)))) {
            if (env) throw Error(Errc::FormatError, format_error(lab_path, 1, "more than one environment label"));
            env = e;
        }
    }
    if (!env) throw Error(Errc::FormatError, format_error(lab_path, 1, "no env_<class> label"));
    for (const auto& [c, v] : agents) states.push_back({{c, v}, *env});

    const auto tra = read_lines(tra_path);
    std::size_t header_n = 0, header_m = 0;
    {
        unsigned long long a = 0, b = 0;
        char tail = 0;
        if (tra.empty() || std::sscanf(tra[0].c_str(), "STATES %llu TRANSITIONS %llu%c", &a, &b, &tail) != 2) {
            throw Error(Errc::FormatError, format_error(tra_path, 1, "expected 'STATES n TRANSITIONS m'"));
        }
        header_n = a;
        header_m = b;
    }
    if (header_n != n) {
        throw Error(Errc::FormatError, format_error(tra_path, 1, "state count " + std::to_string(header_n) + " does not match " + sta_path.string()));
    }
    std::vector<std::vector<chain::Edge>> rows(n);
    std::vector<std::size_t> first_line(n, 0);
    std::size_t m = 0;
    for (std::size_t ln = 1; ln < tra.size(); ++ln) {
        if (blank(tra[ln])) continue;
        std::istringstream ls(tra[ln]);
        std::string a, b, p, extra;
        if (!(ls >> a >> b >> p) || (ls >> extra)) throw Error(Errc::FormatError, format_error(tra_path, ln + 1, "expected 'src dst prob'"));
        const std::size_t src = parse_index(a, tra_path, ln + 1);
        const std::size_t dst = parse_index(b, tra_path, ln + 1);
        if (src >= n || dst >= n) throw Error(Errc::FormatError, format_error(tra_path, ln + 1, "state index out of range"));
        double prob = 0.0;
        std::size_t used = 0;
        try {
            prob = std::stod(p, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != p.size()) throw Error(Errc::FormatError, format_error(tra_path, ln + 1, "bad probability '" + p + "'"));
        if (!(prob > 0.0 && prob <= 1.0)) {
            throw Error(Errc::FormatError, format_error(tra_path, ln + 1, "probability " + p + " outside (0,1]"));
        }
        if (first_line[src] == 0) first_line[src] = ln + 1;
        rows[src].push_back({dst, prob});
        ++m;
    }
    if (m != header_m) {
        throw Error(Errc::FormatError, format_error(tra_path, 1, "header announces " + std::to_string(header_m) + " transitions, found " + std::to_string(m)));
    }
    chain::MarkovChain out(*env, std::move(states), std::move(rows), std::move(labels));
    const auto report = chain::validate_stochastic(out);
    if (!report.pass) {
        const auto bad = report.bad_rows.front();
        throw Error(Errc::FormatError, format_error(tra_path, first_line[bad], "row of state " + std::to_string(bad) + " sums to " + format_exact(report.row_sums[bad])));
    }
    return out;
}

std::string to_prism(const chain::MarkovChain& chain) {
    std::ostringstream os;
    os << "// states are indices; see the .sta export for (cell,speed)\n";
    os << "dtmc\n\nmodule closed_loop\n";
    os << "  s : [0.." << (chain.size() - 1) << "] init 0;\n\n";
    for (std::size_t s = 0; s < chain.size(); ++s) {
        os << "  [] s=" << s << " -> ";
        bool first = true;
        for (const auto& e : chain.successors(s)) {
            os << (first ? "" : " + ") << format_exact(e.probability) << ":(s'=" << e.target << ')';
            first = false;
        }
        os << ";\n";
    }
    os << "endmodule\n";
    for (const auto& [name, states] : chain.labels()) {
        if (name == "init") continue;
        os << "\nlabel \"" << name << "\" = ";
        if (states.empty()) os << "false";
        for (std::size_t i = 0; i < states.size(); ++i) os << (i ? " | " : "") << "s=" << states[i];
        os << ';';
    }
    os << '\n';
    return os.str();
}

std::string to_dot(const chain::MarkovChain& chain) {
    std::ostringstream os;
    os << "digraph closed_loop {\n  rankdir=LR;\n  node [shape=box];\n";
    for (std::size_t s = 0; s < chain.size(); ++s) {
        const auto& st = chain.state(s);
        os << "  " << s << " [label=\"" << s << "\\n" << scenario::to_string(st.agent) << ' ' << scenario::to_string(st.env) << '"';
        if (chain.is_absorbing(s)) os << ", peripheries=2";
        os << "];\n";
    }
    for (std::size_t s = 0; s < chain.size(); ++s) {
        for (const auto& e : chain.successors(s)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", e.probability);
            os << "  " << s << " -> " << e.target << " [label=\"" << buf << "\"];\n";
        }
    }
    os << "}\n";
    return os.str();
}

}  // namespace percheck::io
