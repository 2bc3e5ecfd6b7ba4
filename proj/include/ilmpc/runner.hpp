#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ilmpc/config.hpp"
#include "ilmpc/learner.hpp"
#include "ilmpc/servo.hpp"

namespace ilmpc {

/// Resolved command-line options for `run` and `validate`.
struct RunOptions {
    std::string scenario_name;  // one of the canned scenarios
    std::string config_path;    // or a scenario config file (wins if set)
    std::string output_dir;     // default out/<scenario name>

    bool no_learning = false;
    std::optional<double> rho;
    std::optional<double> gear;
    std::optional<double> epsilon_q_factor;
    std::optional<int> steps_per_iteration;
    std::optional<int> max_iterations;
    std::optional<int> fixed_steps;
    std::vector<std::string> dither_overrides;  // "name:amplitude:omega"
};

/// Loads the scenario (canned or from file) and applies the overrides.
/// Throws std::invalid_argument on unknown scenarios or malformed overrides.
servo::Scenario resolve_scenario(const RunOptions& opt);

/// Returns every violated invariant of the scenario (empty when valid).
std::vector<std::string> validate_scenario(const servo::Scenario& sc);

/// Result of one simulation run, kept for reporting.
struct RunReport {
    servo::Scenario scenario;
    LearningTrace trace;
    long voltage_violations = 0;
    long torque_violations = 0;
    double max_abs_voltage = 0.0;
    double max_abs_torque = 0.0;
    double final_period_rms_angle_error = 0.0;
};

/// Simulates the scenario: Algorithm-style learning loop when learning is
/// enabled and parameters are declared, a fixed-length closed-loop run
/// otherwise. Throws std::runtime_error on solver failures.
RunReport run_scenario(const servo::Scenario& sc);

/// Writes trace.csv, learning.csv, summary.txt, and plot.py into `dir`.
void write_artifacts(const RunReport& report, const std::string& dir);

/// Subcommand entry points; return process exit codes (0 ok, 1 validation).
/// Solver/runtime failures propagate as std::runtime_error (exit code 2 in
/// the CLI driver).
int cmd_run(const RunOptions& opt, std::ostream& out);
int cmd_validate(const RunOptions& opt, std::ostream& out);
int cmd_scenarios(std::ostream& out);

}  // namespace ilmpc
