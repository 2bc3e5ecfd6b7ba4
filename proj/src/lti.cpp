#include "ilmpc/lti.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ilmpc {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

void ContinuousStateSpace::validate() const {
    const auto n = A.rows();
    require(A.cols() == n, "lti: A must be square");
    require(B.rows() == n, "lti: B row count must match A");
    require(C.cols() == n, "lti: C column count must match A");
    require(D.rows() == C.rows() && D.cols() == B.cols(),
            "lti: D must be p x m");
    require(all_finite(A) && all_finite(B) && all_finite(C) && all_finite(D),
            "lti: non-finite model entry");
}

void DiscreteStateSpace::validate() const {
    ContinuousStateSpace{A, B, C, D}.validate();
    require(dt > 0.0, "lti: dt must be positive");
}

Bounds Bounds::unbounded(int n, int m, int p) {
    const double inf = std::numeric_limits<double>::infinity();
    Bounds b;
    b.xmin = Vector::Constant(n, -inf);
    b.xmax = Vector::Constant(n, inf);
    b.umin = Vector::Constant(m, -inf);
    b.umax = Vector::Constant(m, inf);
    b.ymin = Vector::Constant(p, -inf);
    b.ymax = Vector::Constant(p, inf);
    return b;
}

void Bounds::validate(int n, int m, int p) const {
    require(xmin.size() == n && xmax.size() == n, "bounds: state size");
    require(umin.size() == m && umax.size() == m, "bounds: input size");
    require(ymin.size() == p && ymax.size() == p, "bounds: output size");
    auto ordered = [](const Vector& lo, const Vector& hi) {
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] > hi[i])
                return false;
        }
        return true;
    };
    require(ordered(xmin, xmax) && ordered(umin, umax) && ordered(ymin, ymax),
            "bounds: min exceeds max");
}

Matrix matrix_exponential(const Matrix& M) {
    require(M.rows() == M.cols(), "matrix_exponential: non-square input");
    require(all_finite(M), "matrix_exponential: non-finite entry");

    const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Matrix scaled = M / std::ldexp(1.0, squarings);

    // Taylor series on the scaled matrix; order 18 at norm <= 0.5 is far
    // below 1e-15 truncation error.
    Matrix result = Matrix::Identity(M.rows(), M.cols());
    Matrix term = Matrix::Identity(M.rows(), M.cols());
    for (int k = 1; k <= 18; ++k) {
        term = (term * scaled) / static_cast<double>(k);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

DiscreteStateSpace zoh_discretize(const ContinuousStateSpace& sys, double dt) {
    sys.validate();
    require(dt > 0.0, "zoh_discretize: dt must be positive");

    const int n = sys.states();
    const int m = sys.inputs();

    // exp([[A, B], [0, 0]] dt) = [[Ad, Bd], [0, I]]
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.A * dt;
    aug.topRightCorner(n, m) = sys.B * dt;
    const Matrix e = matrix_exponential(aug);

    DiscreteStateSpace d;
    d.A = e.topLeftCorner(n, n);
    d.B = e.topRightCorner(n, m);
    d.C = sys.C;
    d.D = sys.D;
    d.dt = dt;
    return d;
}

AugmentedModel augment_for_tracking(const DiscreteStateSpace& plant,
                                    const ReferenceModel& ref,
                                    bool incremental) {
    plant.validate();
    const int n = plant.states();
    const int m = plant.inputs();
    const int p = plant.outputs();
    const int nr = ref.ref_states();
    require(ref.Ar.cols() == nr, "augment: Ar must be square");
    require(ref.Cr.rows() == p && ref.Cr.cols() == nr,
            "augment: Cr must be p x nr");

    const int na = n + nr + (incremental ? m : 0);

    DiscreteStateSpace aug;
    aug.dt = plant.dt;
    aug.A = Matrix::Zero(na, na);
    aug.B = Matrix::Zero(na, m);
    aug.C = Matrix::Zero(2 * p, na);
    aug.D = Matrix::Zero(2 * p, m);

    aug.A.topLeftCorner(n, n) = plant.A;
    aug.A.block(n, n, nr, nr) = ref.Ar;

    // Plant outputs, then the tracking error y_e = C x - Cr r.
    aug.C.topLeftCorner(p, n) = plant.C;
    aug.C.block(p, 0, p, n) = plant.C;
    aug.C.block(p, n, p, nr) = -ref.Cr;

    if (incremental) {
        // x+ = A x + B (u_prev + dv), u_prev+ = u_prev + dv
        aug.A.block(0, n + nr, n, m) = plant.B;
        aug.A.block(n + nr, n + nr, m, m) = Matrix::Identity(m, m);
        aug.B.topRows(n) = plant.B;
        aug.B.bottomRows(m) = Matrix::Identity(m, m);
        aug.C.block(0, n + nr, p, m) = plant.D;
        aug.D.topRows(p) = plant.D;
    } else {
        aug.B.topRows(n) = plant.B;
        aug.D.topRows(p) = plant.D;
    }

    AugmentedModel out;
    out.model = std::move(aug);
    out.plant_states = n;
    out.ref_states = nr;
    out.incremental = incremental;
    return out;
}

}  // namespace ilmpc
