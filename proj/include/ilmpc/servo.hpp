#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ilmpc/learner.hpp"
#include "ilmpc/lti.hpp"
#include "ilmpc/mpc.hpp"

namespace ilmpc::servo {

/// Physical parameters of the flexible-shaft DC servo benchmark.
/// Inertias, resistance, stiffness, and gear ratio must stay positive;
/// friction terms may turn negative under the studied uncertainties.
struct ServoParams {
    double R_A = 10.0;     // armature resistance [Ohm]
    double K_m = 10.0;     // motor constant [Nm/A]
    double J_l = 25.0;     // load inertia [kg m^2]
    double beta_l = 25.0;  // load friction [Nms/rad]
    double k_l = 1280.0;   // shaft stiffness [Nm/rad]
    double J_m = 0.5;      // motor inertia [kg m^2]
    double beta_m = 0.1;   // motor friction [Nms/rad]
    double gear = 20.0;    // gear ratio (not given in the source data)

    void validate() const;
};

/// States [load angle, load rate, motor angle, motor rate]; outputs
/// [load angle, shaft torque].
ContinuousStateSpace build_servo_model(const ServoParams& p);

/// One learned physical parameter with its dither settings.
struct LearnedParam {
    std::string name;  // "beta_l" or "J_l"
    double amplitude = 0.0;
    double omega = 0.0;
};

struct MpcSettings {
    int N = 20;
    int Nu = 4;
    int Ncu = 4;
    int Nc = 4;
    double Q_y = 1e3;    // load-angle tracking weight
    double R_v = 0.05;   // input-increment weight
    double rho = 1e5;    // slack weight
    double Kf = 0.0;     // terminal gain (scalar case study)
};

struct Scenario {
    std::string name;
    ServoParams true_params;
    ServoParams assumed_params;
    std::vector<LearnedParam> learned;

    double ref_amplitude = 4.5;            // rad
    double ref_period = 20.0 * 3.14159265358979323846;  // s
    double torque_bound = 78.5;            // Nm, soft
    double voltage_bound = 220.0;          // V, hard
    double dt_mpc = 0.1;                   // s

    MpcSettings mpc;
    int steps_per_iteration = 942;         // N_E; dt_mes = N_E dt_mpc
    double q_nominal = 0.0;                // measured baseline window cost
    double epsilon_q_factor = 1.5;
    int max_iterations = 100;
    bool learning = true;
    int fixed_steps = 1500;                // for non-learning runs

    double epsilon_q() const { return epsilon_q_factor * q_nominal; }
    double dt_mes() const { return steps_per_iteration * dt_mpc; }
};

/// nominal, single (delta beta_l = -70), double (plus delta J_l = -0.2).
std::vector<Scenario> canned_scenarios();
Scenario find_scenario(const std::string& name);

/// True plant simulated by exact ZOH of the true parameters.
class PlantSim {
public:
    PlantSim(const ServoParams& true_params, double dt);

    /// Advances one sample under constant input; returns the new state and
    /// the outputs evaluated at the pre-step state.
    std::pair<Vector, Vector> step(double u);

    const DiscreteStateSpace& model() const { return model_; }
    const Vector& state() const { return x_; }
    double time() const { return t_; }

private:
    DiscreteStateSpace model_;
    Vector x_;
    double t_ = 0.0;
};

/// Closed-loop pieces assembled from a scenario: reference sampler, tracking
/// augmentation, MPC weights on the augmented model.
LoopSetup make_loop(const Scenario& sc);
MpcFactory make_mpc_factory(const Scenario& sc);
ContinuousStateSpace assumed_model(const Scenario& sc);
CostSpec make_cost_spec(const Scenario& sc);
MesState make_mes_state(const Scenario& sc);
UncertaintyMap make_uncertainty_map(const Scenario& sc);
LearningConfig make_learning_config(const Scenario& sc);

}  // namespace ilmpc::servo
