#include "ilmpc/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ilmpc {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void put(std::ostringstream& out, const std::string& key, double v) {
    out << key << " = " << fmt(v) << "\n";
}

void serialize_params(std::ostringstream& out, const servo::ServoParams& p) {
    put(out, "R_A", p.R_A);
    put(out, "K_m", p.K_m);
    put(out, "J_l", p.J_l);
    put(out, "beta_l", p.beta_l);
    put(out, "k_l", p.k_l);
    put(out, "J_m", p.J_m);
    put(out, "beta_m", p.beta_m);
    put(out, "gear", p.gear);
}

servo::ServoParams params_from(const ConfigFile& cfg, const std::string& sec) {
    servo::ServoParams p;
    p.R_A = cfg.get_double(sec + ".R_A");
    p.K_m = cfg.get_double(sec + ".K_m");
    p.J_l = cfg.get_double(sec + ".J_l");
    p.beta_l = cfg.get_double(sec + ".beta_l");
    p.k_l = cfg.get_double(sec + ".k_l");
    p.J_m = cfg.get_double(sec + ".J_m");
    p.beta_m = cfg.get_double(sec + ".beta_m");
    p.gear = cfg.get_double(sec + ".gear");
    return p;
}

}  // namespace

const std::string& ConfigFile::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end())
        throw std::invalid_argument("config: missing key '" + key + "'");
    return it->second;
}

std::string ConfigFile::get_or(const std::string& key,
                               const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double ConfigFile::get_double(const std::string& key) const {
    const std::string& raw = get(key);
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: '" + key + "' is not a number: '" +
                                    raw + "'");
    }
    if (used != raw.size())
        throw std::invalid_argument("config: trailing characters in '" + key +
                                    "': '" + raw + "'");
    return v;
}

int ConfigFile::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
        throw std::invalid_argument("config: '" + key + "' must be an integer");
    return i;
}

bool ConfigFile::get_bool(const std::string& key) const {
    const std::string& raw = get(key);
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw std::invalid_argument("config: '" + key + "' must be true or false");
}

ConfigFile parse_config(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: unterminated section at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config: empty section name at line " +
                                            std::to_string(lineno));
            if (std::find(cfg.sections.begin(), cfg.sections.end(), section) ==
                cfg.sections.end())
                cfg.sections.push_back(section);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config: empty key or value at line " +
                                        std::to_string(lineno));
        if (section.empty())
            throw std::invalid_argument("config: key outside any section at line " +
                                        std::to_string(lineno));
        const std::string full = section + "." + key;
        if (cfg.values.count(full))
            throw std::invalid_argument("config: duplicate key '" + full +
                                        "' at line " + std::to_string(lineno));
        cfg.values[full] = value;
    }
    return cfg;
}

ConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_scenario(const servo::Scenario& sc) {
    std::ostringstream out;
    out << "[scenario]\n";
    out << "name = " << sc.name << "\n";
    out << "learning = " << (sc.learning ? "true" : "false") << "\n";
    out << "max_iterations = " << sc.max_iterations << "\n";
    out << "fixed_steps = " << sc.fixed_steps << "\n";
    out << "steps_per_iteration = " << sc.steps_per_iteration << "\n";
    put(out, "dt_mpc", sc.dt_mpc);
    put(out, "q_nominal", sc.q_nominal);
    put(out, "epsilon_q_factor", sc.epsilon_q_factor);
    put(out, "ref_amplitude", sc.ref_amplitude);
    put(out, "ref_period", sc.ref_period);
    put(out, "torque_bound", sc.torque_bound);
    put(out, "voltage_bound", sc.voltage_bound);

    out << "\n[plant]\n";
    serialize_params(out, sc.true_params);
    out << "\n[model]\n";
    serialize_params(out, sc.assumed_params);

    out << "\n[mpc]\n";
    out << "N = " << sc.mpc.N << "\n";
    out << "Nu = " << sc.mpc.Nu << "\n";
    out << "Ncu = " << sc.mpc.Ncu << "\n";
    out << "Nc = " << sc.mpc.Nc << "\n";
    put(out, "Q_y", sc.mpc.Q_y);
    put(out, "R_v", sc.mpc.R_v);
    put(out, "rho", sc.mpc.rho);
    put(out, "Kf", sc.mpc.Kf);

    for (const auto& lp : sc.learned) {
        out << "\n[learn." << lp.name << "]\n";
        put(out, "amplitude", lp.amplitude);
        put(out, "omega", lp.omega);
    }
    return out.str();
}

servo::Scenario scenario_from_config(const ConfigFile& cfg) {
    servo::Scenario sc;
    sc.name = cfg.get("scenario.name");
    sc.learning = cfg.get_bool("scenario.learning");
    sc.max_iterations = cfg.get_int("scenario.max_iterations");
    sc.fixed_steps = cfg.get_int("scenario.fixed_steps");
    sc.steps_per_iteration = cfg.get_int("scenario.steps_per_iteration");
    sc.dt_mpc = cfg.get_double("scenario.dt_mpc");
    sc.q_nominal = cfg.get_double("scenario.q_nominal");
    sc.epsilon_q_factor = cfg.get_double("scenario.epsilon_q_factor");
    sc.ref_amplitude = cfg.get_double("scenario.ref_amplitude");
    sc.ref_period = cfg.get_double("scenario.ref_period");
    sc.torque_bound = cfg.get_double("scenario.torque_bound");
    sc.voltage_bound = cfg.get_double("scenario.voltage_bound");

    sc.true_params = params_from(cfg, "plant");
    sc.assumed_params = params_from(cfg, "model");

    sc.mpc.N = cfg.get_int("mpc.N");
    sc.mpc.Nu = cfg.get_int("mpc.Nu");
    sc.mpc.Ncu = cfg.get_int("mpc.Ncu");
    sc.mpc.Nc = cfg.get_int("mpc.Nc");
    sc.mpc.Q_y = cfg.get_double("mpc.Q_y");
    sc.mpc.R_v = cfg.get_double("mpc.R_v");
    sc.mpc.rho = cfg.get_double("mpc.rho");
    sc.mpc.Kf = cfg.get_double("mpc.Kf");

    sc.learned.clear();
    for (const auto& sec : cfg.sections) {
        if (sec.rfind("learn.", 0) != 0) continue;
        servo::LearnedParam lp;
        lp.name = sec.substr(6);
        lp.amplitude = cfg.get_double(sec + ".amplitude");
        lp.omega = cfg.get_double(sec + ".omega");
        sc.learned.push_back(std::move(lp));
    }
    return sc;
}

}  // namespace ilmpc
