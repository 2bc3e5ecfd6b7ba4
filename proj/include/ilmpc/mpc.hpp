#pragma once

#include <vector>

#include "ilmpc/lti.hpp"
#include "ilmpc/qp.hpp"

namespace ilmpc {

/// Horizons, weights, and bounds of the finite-horizon problem. Beyond the
/// control horizon Nu the input is given by the terminal law u = Kf x.
struct MpcConfig {
    int N = 1;    // prediction horizon
    int Nu = 1;   // control horizon, Nu <= N
    int Ncu = 0;  // input-constraint horizon, Ncu <= N
    int Nc = 0;   // state/output-constraint horizon, Nc <= N-1
    Matrix Q;     // n x n, PSD
    Matrix R;     // m x m, PD
    Matrix P;     // n x n terminal weight, PSD
    Matrix Kf;    // m x n terminal gain
    Bounds bounds;
    bool soft_output = false;
    double rho = 1e5;  // slack weight, > 0 when soft_output

    void validate(int n, int m, int p) const;
};

/// Precomputed condensed problem: stacked predictions for x(1..N) and the
/// constraint rows G_u U <= w0 + W_x x(k), with per-row softening flags.
class CondensedMpc {
public:
    Matrix free_response;    // (N n) x n
    Matrix forced_response;  // (N n) x (Nu m), block lower triangular
    Matrix hessian;          // 2 (S' Qbar S + Rbar), input block only
    Matrix gradient_map;     // f(x) = gradient_map x
    Matrix constraint_G;     // rows over U
    Matrix constraint_Wx;    // RHS state dependence
    Vector constraint_w0;
    std::vector<bool> soft_row;
    int n = 0, m = 0, N = 0, Nu = 0;
    bool soft_output = false;
    double rho = 0.0;

    int decision_dim() const { return Nu * m + (soft_output ? 1 : 0); }

    /// Stacked prediction x(1..N) under the given input sequence.
    Vector predict(const Vector& x_now, const Vector& u_seq) const;
};

CondensedMpc condense(const DiscreteStateSpace& model, const MpcConfig& cfg);

/// The per-cycle QP over [U; sigma]; sigma present iff soft_output.
QpProblem assemble_qp(const CondensedMpc& c, const Vector& x_now);

struct ControlStep {
    Vector u_applied;             // first input block
    Vector input_sequence;        // full Nu m solution
    Vector predicted_states;      // stacked x(1..N) under the solution
    QpStatus qp_status = QpStatus::optimal;
    double sigma = 0.0;
    int qp_iterations = 0;
};

/// Receding-horizon driver owning the solver workspace and the warm start
/// carried between consecutive calls.
class MpcController {
public:
    explicit MpcController(CondensedMpc condensed)
        : condensed_(std::move(condensed)) {}

    ControlStep step(const Vector& x_now);
    const CondensedMpc& condensed() const { return condensed_; }
    const std::vector<int>& warm_start() const { return warm_; }
    void set_warm_start(std::vector<int> ws) { warm_ = std::move(ws); }

    /// Swap in a re-condensed problem (same layout), keeping the warm start.
    void replace(CondensedMpc condensed) { condensed_ = std::move(condensed); }

private:
    CondensedMpc condensed_;
    QpSolver solver_;
    std::vector<int> warm_;
};

}  // namespace ilmpc
