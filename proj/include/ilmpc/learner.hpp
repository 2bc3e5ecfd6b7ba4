#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ilmpc/lti.hpp"
#include "ilmpc/mes.hpp"
#include "ilmpc/mpc.hpp"

namespace ilmpc {

/// One weighted term of the learning cost: the squared norm of a tracking
/// error component over the window, optionally plus its backward-difference
/// velocity.
struct CostTerm {
    int output_index = 0;
    double weight = 1.0;
    bool with_derivative = false;
};

struct CostSpec {
    std::vector<CostTerm> terms;
    int window = 0;   // N_E samples
    double dt = 0.0;  // sample period for derivative terms
};

/// Backward differences (e[i] - e[i-1]) / dt; the first sample uses `prior`
/// (the signal value just before the window, zero at the start of a run).
std::vector<double> error_velocity(const std::vector<double>& e, double dt,
                                   double prior = 0.0);

/// Learning cost over a window (rows = samples, cols = error outputs).
/// `prior` is the error row preceding the window, used by derivative terms.
double evaluate_cost(const CostSpec& spec, const Matrix& window,
                     const Vector& prior);

/// Maps the learned vector to a rebuilt prediction model. `rebuild` applies
/// either physical-parameter corrections or projected elementwise matrix
/// deltas, depending on how the map was constructed.
struct UncertaintyMap {
    std::vector<std::string> names;
    std::function<ContinuousStateSpace(const Vector&)> rebuild;

    int size() const { return static_cast<int>(names.size()); }
};

ContinuousStateSpace rebuild_model(const UncertaintyMap& map,
                                   const Vector& delta_hat);

/// Clips singular values at `bound`, projecting onto the spectral-norm ball.
Matrix clip_spectral_norm(const Matrix& M, double bound);

enum class MatrixSlot { A, B, C, D };
struct ElementEntry {
    MatrixSlot slot;
    int row = 0;
    int col = 0;
};

/// Elementwise uncertainty: delta_hat entries land at the listed matrix
/// positions and each delta matrix is projected to its spectral bound.
UncertaintyMap make_elementwise_map(ContinuousStateSpace nominal,
                                    std::vector<ElementEntry> entries,
                                    double l_A, double l_B, double l_C,
                                    double l_D);

struct LearningConfig {
    double epsilon_Q = 0.0;   // stop learning once Q <= epsilon_Q
    int steps_per_iteration = 0;  // N_E
    double dt_mpc = 0.0;
    int max_iterations = 100;

    double dt_mes() const { return steps_per_iteration * dt_mpc; }
};

/// Closed loop of the true plant under the (possibly re-learned) MPC.
struct LoopSetup {
    DiscreteStateSpace true_plant;
    ReferenceModel ref;  // Cr maps the reference state to plant outputs
    std::function<Vector(double)> reference;  // reference state at time t
    bool incremental = true;
};

using MpcFactory = std::function<CondensedMpc(const ContinuousStateSpace&)>;

struct StepRecord {
    double t = 0.0;
    Vector x;   // plant state
    Vector u;   // applied plant input
    Vector y;   // plant outputs
    Vector r;   // reference state
    Vector ye;  // tracking error y - Cr r
    double sigma = 0.0;
    int qp_iterations = 0;
};

struct LearningTrace {
    std::vector<StepRecord> steps;
    std::vector<double> iteration_cost;     // Q per learning iteration
    std::vector<Vector> iteration_delta;    // estimate in effect per window
    Vector final_delta;
    int iterations = 0;
    bool converged = false;
};

/// Simulates `n_steps` of the closed loop with a fixed prediction model,
/// appending to `trace`. Plant state and warm start live in the controller
/// and `x`/`u_prev`, so successive calls continue the same run.
void run_closed_loop(const LoopSetup& loop, MpcController& controller,
                     Vector& x, Vector& u_prev, long& step_index, double dt,
                     int n_steps, LearningTrace& trace);

/// Alternates windows of N_E MPC steps with one extremum-seeking update
/// while Q exceeds epsilon_Q. The plant state is never reset between
/// iterations. `learning` false runs the windows without any update.
LearningTrace run_algorithm_one(const LoopSetup& loop,
                                const MpcFactory& factory,
                                const ContinuousStateSpace& initial_model,
                                MesState mes, const UncertaintyMap& map,
                                const CostSpec& cost, LearningConfig cfg,
                                bool learning = true);

}  // namespace ilmpc
