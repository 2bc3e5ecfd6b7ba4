#pragma once

#include <vector>

#include "ilmpc/lti.hpp"

namespace ilmpc {

/// min 1/2 z'Hz + f'z  s.t.  G z <= w
struct QpProblem {
    Matrix H;
    Vector f;
    Matrix G;  // n_q x n_z (n_q may be zero)
    Vector w;

    int vars() const { return static_cast<int>(H.rows()); }
    int constraints() const { return static_cast<int>(G.rows()); }

    /// Symmetrizes H in place; throws if H is not positive definite
    /// (minimum eigenvalue below 1e-9) or any entry is non-finite.
    void validate();
};

enum class QpStatus { optimal, infeasible, iteration_limit };

struct QpSolution {
    Vector z;
    double objective = 0.0;
    std::vector<int> active_set;
    Vector multipliers;  // one per constraint, zero when inactive
    QpStatus status = QpStatus::optimal;
    int iterations = 0;  // active-set changes
};

/// Dense dual active-set solver (Goldfarb-Idnani). Starts from the
/// unconstrained minimum and adds violated constraints one at a time, so no
/// feasibility phase is needed. A warm-start index list reorders which
/// violated constraints are considered first.
class QpSolver {
public:
    QpSolution solve(QpProblem problem,
                     const std::vector<int>* warm_start = nullptr);

private:
    // scratch, reused across solves
    Eigen::LLT<Matrix> llt_;
};

}  // namespace ilmpc
