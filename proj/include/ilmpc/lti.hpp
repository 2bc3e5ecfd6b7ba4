#pragma once

#include <Eigen/Dense>

namespace ilmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Continuous-time LTI model  dx/dt = A x + B u,  y = C x + D u.
struct ContinuousStateSpace {
    Matrix A, B, C, D;

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }

    /// Throws std::invalid_argument on dimension mismatch or non-finite entries.
    void validate() const;
};

/// Discrete-time LTI model  x+ = A x + B u,  y = C x + D u, sampled at dt.
struct DiscreteStateSpace {
    Matrix A, B, C, D;
    double dt = 0.0;

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }

    void validate() const;
};

/// Componentwise box bounds; entries may be +-infinity for "unbounded".
struct Bounds {
    Vector xmin, xmax, umin, umax, ymin, ymax;

    static Bounds unbounded(int n, int m, int p);
    void validate(int n, int m, int p) const;
};

/// Reference prediction dynamics r+ = Ar r with output map Cr (p x nr),
/// so the tracking error is y_e = C x - Cr r.
struct ReferenceModel {
    Matrix Ar;
    Matrix Cr;
    Vector rr;  // current reference state

    int ref_states() const { return static_cast<int>(Ar.rows()); }
};

/// exp(M) by scaling-and-squaring with a fixed-order Taylor core.
Matrix matrix_exponential(const Matrix& M);

/// Exact zero-order-hold discretization via the augmented-matrix exponential.
DiscreteStateSpace zoh_discretize(const ContinuousStateSpace& sys, double dt);

/// Tracking augmentation. State layout [x; r] or, with incremental input,
/// [x; r; u_prev] driven by dv with u = u_prev + dv. Outputs are the plant
/// outputs followed by the tracking error y_e = C x - Cr r.
struct AugmentedModel {
    DiscreteStateSpace model;
    int plant_states = 0;
    int ref_states = 0;
    bool incremental = false;

    int state_dim() const { return model.states(); }
    /// Index of the first u_prev component (incremental only).
    int uprev_offset() const { return plant_states + ref_states; }
    /// Row index of the first tracking-error output.
    int error_output_offset(int plant_outputs) const { return plant_outputs; }
};

AugmentedModel augment_for_tracking(const DiscreteStateSpace& plant,
                                    const ReferenceModel& ref,
                                    bool incremental);

}  // namespace ilmpc
