#include "ilmpc/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ilmpc/mes.hpp"

namespace ilmpc {

namespace {

constexpr double kBoundTol = 1e-9;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Renders the run artifacts (trace.csv, learning.csv) as PNG figures."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]} if rows else {}


def main():
    here = os.path.dirname(os.path.abspath(sys.argv[0]))
    trace = read_csv(os.path.join(here, "trace.csv"))
    learning = read_csv(os.path.join(here, "learning.csv"))

    t = trace["t"]

    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, trace["r"], "k--", label="reference")
    ax.plot(t, trace["y1"], label="load angle")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("angle [rad]")
    ax.legend()
    fig.savefig(os.path.join(here, "tracking.png"), dpi=120,
                bbox_inches="tight")

    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, trace["y2"], label="shaft torque")
    ax.axhline(78.5, color="r", linestyle=":")
    ax.axhline(-78.5, color="r", linestyle=":")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("torque [Nm]")
    ax.legend()
    fig.savefig(os.path.join(here, "torque.png"), dpi=120, bbox_inches="tight")

    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(t, trace["u"], label="motor voltage")
    ax.axhline(220.0, color="r", linestyle=":")
    ax.axhline(-220.0, color="r", linestyle=":")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("u [V]")
    ax.legend()
    fig.savefig(os.path.join(here, "voltage.png"), dpi=120,
                bbox_inches="tight")

    if learning:
        it = learning["iteration"]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(it, learning["Q"], "o-")
        ax.set_xlabel("learning iteration")
        ax.set_ylabel("Q")
        fig.savefig(os.path.join(here, "cost.png"), dpi=120,
                    bbox_inches="tight")

        deltas = [k for k in learning if k.startswith("delta_")]
        if deltas:
            fig, ax = plt.subplots(figsize=(7, 4))
            for k in deltas:
                ax.plot(it, learning[k], "o-", label=k)
            ax.set_xlabel("learning iteration")
            ax.set_ylabel("estimate")
            ax.legend()
            fig.savefig(os.path.join(here, "estimates.png"), dpi=120,
                        bbox_inches="tight")

    print("wrote figures next to the CSVs")


if __name__ == "__main__":
    main()
)PY";

void apply_dither_override(servo::Scenario& sc, const std::string& spec) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::invalid_argument(
            "runner: dither override must be name:amplitude:omega, got '" +
            spec + "'");
    const std::string name = spec.substr(0, c1);
    const std::string amp_s = spec.substr(c1 + 1, c2 - c1 - 1);
    const std::string omega_s = spec.substr(c2 + 1);
    double amp = 0.0, omega = 0.0;
    try {
        amp = std::stod(amp_s);
        omega = std::stod(omega_s);
    } catch (const std::exception&) {
        throw std::invalid_argument("runner: bad dither numbers in '" + spec +
                                    "'");
    }
    for (auto& lp : sc.learned) {
        if (lp.name == name) {
            lp.amplitude = amp;
            lp.omega = omega;
            return;
        }
    }
    throw std::invalid_argument("runner: no learned parameter named '" + name +
                                "'");
}

}  // namespace

servo::Scenario resolve_scenario(const RunOptions& opt) {
    servo::Scenario sc;
    if (!opt.config_path.empty())
        sc = scenario_from_config(load_config(opt.config_path));
    else if (!opt.scenario_name.empty())
        sc = servo::find_scenario(opt.scenario_name);
    else
        throw std::invalid_argument("runner: no scenario given");

    if (opt.no_learning) sc.learning = false;
    if (opt.rho) sc.mpc.rho = *opt.rho;
    if (opt.gear) {
        sc.true_params.gear = *opt.gear;
        sc.assumed_params.gear = *opt.gear;
    }
    if (opt.epsilon_q_factor) sc.epsilon_q_factor = *opt.epsilon_q_factor;
    if (opt.steps_per_iteration) sc.steps_per_iteration = *opt.steps_per_iteration;
    if (opt.max_iterations) sc.max_iterations = *opt.max_iterations;
    if (opt.fixed_steps) sc.fixed_steps = *opt.fixed_steps;
    for (const auto& d : opt.dither_overrides) apply_dither_override(sc, d);
    return sc;
}

std::vector<std::string> validate_scenario(const servo::Scenario& sc) {
    std::vector<std::string> bad;
    auto check = [&](bool ok, const std::string& msg) {
        if (!ok) bad.push_back(msg);
    };

    try {
        sc.true_params.validate();
    } catch (const std::exception& e) {
        bad.push_back(std::string("plant: ") + e.what());
    }
    try {
        sc.assumed_params.validate();
    } catch (const std::exception& e) {
        bad.push_back(std::string("model: ") + e.what());
    }

    check(sc.mpc.N >= 1, "mpc: N must be >= 1");
    check(sc.mpc.Nu >= 1 && sc.mpc.Nu <= sc.mpc.N, "mpc: need 1 <= Nu <= N");
    check(sc.mpc.Ncu >= 0 && sc.mpc.Ncu <= sc.mpc.N, "mpc: need 0 <= Ncu <= N");
    check(sc.mpc.Nc >= 0 && sc.mpc.Nc <= sc.mpc.N - 1,
          "mpc: need 0 <= Nc <= N-1");
    check(sc.mpc.Q_y >= 0.0, "mpc: Q_y must be >= 0");
    check(sc.mpc.R_v > 0.0, "mpc: R_v must be > 0");
    check(sc.mpc.rho > 0.0, "mpc: rho must be > 0");

    check(sc.dt_mpc > 0.0, "scenario: dt_mpc must be > 0");
    check(sc.steps_per_iteration > 0, "scenario: N_E must be > 0");
    check(sc.ref_period > 0.0, "scenario: ref_period must be > 0");
    check(std::isfinite(sc.ref_amplitude), "scenario: ref_amplitude not finite");
    check(sc.torque_bound > 0.0, "scenario: torque bound must be > 0");
    check(sc.voltage_bound > 0.0, "scenario: voltage bound must be > 0");
    check(sc.max_iterations >= 1, "scenario: max_iterations must be >= 1");
    check(sc.fixed_steps >= 1, "scenario: fixed_steps must be >= 1");
    check(sc.epsilon_q_factor > 0.0, "scenario: epsilon_q_factor must be > 0");
    if (sc.learning && !sc.learned.empty())
        check(sc.q_nominal > 0.0,
              "scenario: q_nominal must be > 0 for learning runs");

    std::vector<double> omegas;
    for (const auto& lp : sc.learned) {
        check(lp.amplitude > 0.0, "dither " + lp.name + ": amplitude must be > 0");
        check(lp.omega > 0.0, "dither " + lp.name + ": omega must be > 0");
        omegas.push_back(lp.omega);
    }
    if (!omegas.empty() && sc.dt_mpc > 0.0 && sc.steps_per_iteration > 0) {
        try {
            check_dither_frequencies(omegas, sc.dt_mes());
        } catch (const std::exception& e) {
            bad.push_back(std::string("dither: ") + e.what());
        }
    }
    return bad;
}

RunReport run_scenario(const servo::Scenario& sc) {
    RunReport report;
    report.scenario = sc;

    const auto loop = servo::make_loop(sc);
    const auto factory = servo::make_mpc_factory(sc);
    const bool learn = sc.learning && !sc.learned.empty();

    if (learn) {
        report.trace = run_algorithm_one(
            loop, factory, servo::assumed_model(sc), servo::make_mes_state(sc),
            servo::make_uncertainty_map(sc), servo::make_cost_spec(sc),
            servo::make_learning_config(sc), true);
    } else {
        MpcController controller(factory(servo::assumed_model(sc)));
        Vector x = Vector::Zero(4), u_prev = Vector::Zero(1);
        long step_index = 0;
        run_closed_loop(loop, controller, x, u_prev, step_index, sc.dt_mpc,
                        sc.fixed_steps, report.trace);

        // evaluate the learning cost on every complete window for reporting
        const auto spec = servo::make_cost_spec(sc);
        const int n_e = sc.steps_per_iteration;
        const Vector frozen = Vector::Zero(static_cast<Eigen::Index>(sc.learned.size()));
        for (int w = 0; (w + 1) * n_e <= sc.fixed_steps; ++w) {
            Matrix window(n_e, 2);
            for (int i = 0; i < n_e; ++i)
                window.row(i) = report.trace.steps[w * n_e + i].ye.transpose();
            const Vector prior =
                w == 0 ? Vector(Vector::Zero(2))
                       : report.trace.steps[w * n_e - 1].ye;
            report.trace.iteration_cost.push_back(
                evaluate_cost(spec, window, prior));
            report.trace.iteration_delta.push_back(frozen);
            report.trace.iterations = w + 1;
        }
        report.trace.final_delta = frozen;
    }

    for (const auto& st : report.trace.steps) {
        const double u = std::abs(st.u[0]);
        const double tau = std::abs(st.y[1]);
        report.max_abs_voltage = std::max(report.max_abs_voltage, u);
        report.max_abs_torque = std::max(report.max_abs_torque, tau);
        if (u > sc.voltage_bound + kBoundTol) ++report.voltage_violations;
        if (tau > sc.torque_bound + kBoundTol) ++report.torque_violations;
    }

    const long period_steps =
        std::lround(sc.ref_period / sc.dt_mpc);
    const long total = static_cast<long>(report.trace.steps.size());
    const long start = std::max<long>(0, total - period_steps);
    double sum = 0.0;
    for (long i = start; i < total; ++i) {
        const double e = report.trace.steps[static_cast<size_t>(i)].ye[0];
        sum += e * e;
    }
    if (total > start)
        report.final_period_rms_angle_error =
            std::sqrt(sum / static_cast<double>(total - start));
    return report;
}

void write_artifacts(const RunReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto& sc = report.scenario;
    const auto& trace = report.trace;

    {
        std::ofstream out(fs::path(dir) / "trace.csv");
        out << "t,x1,x2,x3,x4,u,y1,y2,r,ye1,ye2,sigma,qp_iterations\n";
        for (const auto& st : trace.steps) {
            out << fmt(st.t);
            for (int i = 0; i < st.x.size(); ++i) out << "," << fmt(st.x[i]);
            out << "," << fmt(st.u[0]);
            out << "," << fmt(st.y[0]) << "," << fmt(st.y[1]);
            out << "," << fmt(st.r[0]);
            out << "," << fmt(st.ye[0]) << "," << fmt(st.ye[1]);
            out << "," << fmt(st.sigma);
            out << "," << st.qp_iterations << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "learning.csv");
        out << "iteration,Q";
        for (const auto& lp : sc.learned) out << ",delta_" << lp.name;
        out << "\n";
        for (int i = 0; i < trace.iterations; ++i) {
            out << (i + 1) << "," << fmt(trace.iteration_cost[i]);
            const auto& d = trace.iteration_delta[i];
            for (int j = 0; j < d.size(); ++j) out << "," << fmt(d[j]);
            out << "\n";
        }
    }
    {
        std::ofstream out(fs::path(dir) / "summary.txt");
        out << "scenario = " << sc.name << "\n";
        out << "learning = "
            << ((sc.learning && !sc.learned.empty()) ? "true" : "false") << "\n";
        out << "steps = " << trace.steps.size() << "\n";
        out << "iterations = " << trace.iterations << "\n";
        out << "converged = " << (trace.converged ? "true" : "false") << "\n";
        out << "q_nominal = " << fmt(sc.q_nominal) << "\n";
        out << "epsilon_q = " << fmt(sc.epsilon_q()) << "\n";
        for (size_t i = 0; i < sc.learned.size(); ++i)
            out << "final_delta_" << sc.learned[i].name << " = "
                << fmt(trace.final_delta[static_cast<Eigen::Index>(i)]) << "\n";
        out << "voltage_violations = " << report.voltage_violations << "\n";
        out << "torque_violations = " << report.torque_violations << "\n";
        out << "max_abs_voltage = " << fmt(report.max_abs_voltage) << "\n";
        out << "max_abs_torque = " << fmt(report.max_abs_torque) << "\n";
        out << "final_period_rms_angle_error = "
            << fmt(report.final_period_rms_angle_error) << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "plot.py");
        out << kPlotScript;
    }
}

int cmd_run(const RunOptions& opt, std::ostream& out) {
    const servo::Scenario sc = resolve_scenario(opt);
    const auto problems = validate_scenario(sc);
    if (!problems.empty()) {
        for (const auto& p : problems) out << "invalid: " << p << "\n";
        return 1;
    }
    const std::string dir =
        opt.output_dir.empty() ? "out/" + sc.name : opt.output_dir;
    const RunReport report = run_scenario(sc);
    write_artifacts(report, dir);
    out << "scenario " << sc.name << ": " << report.trace.steps.size()
        << " steps, " << report.trace.iterations << " iterations, "
        << (report.trace.converged ? "converged" : "not converged") << "\n";
    out << "artifacts written to " << dir << "\n";
    return 0;
}

int cmd_validate(const RunOptions& opt, std::ostream& out) {
    const servo::Scenario sc = resolve_scenario(opt);
    out << serialize_scenario(sc);
    out << "\nresolved: N_E = " << sc.steps_per_iteration
        << ", dt_mes = " << sc.dt_mes() << " s, epsilon_q = "
        << fmt(sc.epsilon_q()) << "\n";
    const auto problems = validate_scenario(sc);
    if (problems.empty()) {
        out << "OK\n";
        return 0;
    }
    for (const auto& p : problems) out << "invalid: " << p << "\n";
    return 1;
}

int cmd_scenarios(std::ostream& out) {
    for (const auto& sc : servo::canned_scenarios()) {
        out << sc.name;
        if (sc.learned.empty()) {
            out << ": matched plant and model, no learned parameters\n";
        } else {
            out << ": learns";
            for (const auto& lp : sc.learned) out << " " << lp.name;
            out << "\n";
        }
    }
    return 0;
}

}  // namespace ilmpc
