#include "doctest.h"

#include <random>

#include "ilmpc/mpc.hpp"
#include "oracles.hpp"

using namespace ilmpc;

namespace {

DiscreteStateSpace scalar_model(double a, double b) {
    DiscreteStateSpace d;
    d.A = Matrix::Constant(1, 1, a);
    d.B = Matrix::Constant(1, 1, b);
    d.C = Matrix::Identity(1, 1);
    d.D = Matrix::Zero(1, 1);
    d.dt = 0.1;
    return d;
}

MpcConfig basic_config(int n, int m, int p, int N, int Nu) {
    MpcConfig cfg;
    cfg.N = N;
    cfg.Nu = Nu;
    cfg.Ncu = 0;
    cfg.Nc = 0;
    cfg.Q = Matrix::Identity(n, n);
    cfg.R = Matrix::Identity(m, m);
    cfg.P = Matrix::Identity(n, n);
    cfg.Kf = Matrix::Zero(m, n);
    cfg.bounds = Bounds::unbounded(n, m, p);
    return cfg;
}

DiscreteStateSpace random_stable_model(std::mt19937& rng, int n, int m, int p) {
    DiscreteStateSpace d;
    d.A = oracles::random_matrix(rng, n, n, 0.4);
    d.B = oracles::random_matrix(rng, n, m);
    d.C = oracles::random_matrix(rng, p, n);
    d.D = Matrix::Zero(p, m);
    d.dt = 0.1;
    return d;
}

}  // namespace

TEST_CASE("one-step scalar problem matches the hand KKT solution") {
    // N = Nu = 1, A = B = Q = R = P = 1, Kf = 0:
    // J = 1/2 U' H U + f U with H = 2(R + B P B) = 4, f = 2 A P B x = 2x,
    // so u*(x) = -x/2.
    const auto model = scalar_model(1.0, 1.0);
    const auto cfg = basic_config(1, 1, 1, 1, 1);
    const auto c = condense(model, cfg);

    CHECK(c.hessian(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.gradient_map(0, 0) == doctest::Approx(2.0).epsilon(1e-14));

    MpcController ctrl(c);
    const auto step = ctrl.step(Vector::Constant(1, 2.0));
    REQUIRE(step.qp_status == QpStatus::optimal);
    CHECK(step.u_applied[0] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("zero state gives zero input and zero slack") {
    const auto model = scalar_model(1.0, 1.0);
    auto cfg = basic_config(1, 1, 1, 5, 2);
    cfg.Nc = 3;
    cfg.bounds.ymin[0] = -1.0;
    cfg.bounds.ymax[0] = 1.0;
    cfg.soft_output = true;
    cfg.rho = 1e5;
    MpcController ctrl(condense(model, cfg));
    const auto step = ctrl.step(Vector::Zero(1));
    REQUIRE(step.qp_status == QpStatus::optimal);
    CHECK(step.u_applied.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(step.sigma == doctest::Approx(0.0));
}

TEST_CASE("inputs beyond Nu follow the terminal law (Kf = 0)") {
    const auto model = scalar_model(0.8, 0.5);
    const auto cfg = basic_config(1, 1, 1, 2, 1);
    const auto c = condense(model, cfg);

    // with Kf = 0: x(2) = A^2 x + A B u(0) -> second prediction block
    const double x0 = 1.3, u0 = -0.4;
    const Vector pred = c.predict(Vector::Constant(1, x0), Vector::Constant(1, u0));
    CHECK(pred[0] == doctest::Approx(0.8 * x0 + 0.5 * u0).epsilon(1e-14));
    CHECK(pred[1] == doctest::Approx(0.64 * x0 + 0.8 * 0.5 * u0).epsilon(1e-14));
}

TEST_CASE("unconstrained step equals the analytic least-squares solution") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3, m = 2;
        const auto model = random_stable_model(rng, n, m, 1);
        auto cfg = basic_config(n, m, 1, 8, 3);
        MpcController ctrl(condense(model, cfg));
        const Vector x = oracles::random_matrix(rng, n, 1);
        const auto step = ctrl.step(x);
        REQUIRE(step.qp_status == QpStatus::optimal);

        const auto& c = ctrl.condensed();
        const Vector analytic = -c.hessian.ldlt().solve(c.gradient_map * x);
        CHECK((step.input_sequence - analytic).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("predicted trajectory equals open-loop propagation") {
    std::mt19937 rng(31);
    const int n = 3, m = 1;
    const auto model = random_stable_model(rng, n, m, 2);
    auto cfg = basic_config(n, m, 2, 6, 3);
    cfg.Kf = oracles::random_matrix(rng, m, n, 0.1);
    cfg.Ncu = 2;
    cfg.bounds.umin.setConstant(-0.5);
    cfg.bounds.umax.setConstant(0.5);
    MpcController ctrl(condense(model, cfg));

    const Vector x0 = oracles::random_matrix(rng, n, 1);
    const auto step = ctrl.step(x0);
    REQUIRE(step.qp_status == QpStatus::optimal);

    // propagate by hand, applying the terminal law beyond Nu
    Vector x = x0;
    for (int i = 0; i < cfg.N; ++i) {
        const Vector u = (i < cfg.Nu) ? step.input_sequence.segment(i * m, m)
                                      : Vector(cfg.Kf * x);
        x = model.A * x + model.B * u;
        CHECK((step.predicted_states.segment(i * n, n) - x).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("hard input bounds are never violated") {
    std::mt19937 rng(53);
    const int n = 2, m = 1;
    const auto model = random_stable_model(rng, n, m, 1);
    auto cfg = basic_config(n, m, 1, 6, 4);
    cfg.Ncu = 4;
    cfg.bounds.umin.setConstant(-0.3);
    cfg.bounds.umax.setConstant(0.3);
    MpcController ctrl(condense(model, cfg));

    Vector x = Vector::Constant(n, 5.0);
    for (int k = 0; k < 50; ++k) {
        const auto step = ctrl.step(x);
        REQUIRE(step.qp_status == QpStatus::optimal);
        CHECK(step.input_sequence.cwiseAbs().maxCoeff() <= 0.3 + 1e-7);
        x = model.A * x + model.B * step.u_applied;
    }
}

TEST_CASE("slack column structure and decision dimensions") {
    const auto model = scalar_model(1.0, 1.0);
    auto cfg = basic_config(1, 1, 1, 5, 4);
    cfg.Nc = 3;
    cfg.Ncu = 2;
    cfg.bounds.ymin[0] = -1.0;
    cfg.bounds.ymax[0] = 1.0;
    cfg.bounds.umin[0] = -2.0;
    cfg.bounds.umax[0] = 2.0;

    SUBCASE("hard outputs") {
        cfg.soft_output = false;
        const auto c = condense(model, cfg);
        CHECK(c.decision_dim() == 4);
        const auto qp = assemble_qp(c, Vector::Zero(1));
        CHECK(qp.vars() == 4);
        // x = 0 with symmetric bounds: zero gradient
        CHECK(qp.f.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
    SUBCASE("soft outputs add one shared slack") {
        cfg.soft_output = true;
        cfg.rho = 1e5;
        const auto c = condense(model, cfg);
        CHECK(c.decision_dim() == 5);
        const auto qp = assemble_qp(c, Vector::Zero(1));
        CHECK(qp.vars() == 5);
        CHECK(qp.H(4, 4) == doctest::Approx(2e5));
        // -1 in the slack column exactly on softened (output) rows
        int soft_rows = 0;
        for (int r = 0; r < qp.constraints() - 1; ++r) {
            if (c.soft_row[r]) {
                CHECK(qp.G(r, 4) == -1.0);
                ++soft_rows;
            } else {
                CHECK(qp.G(r, 4) == 0.0);
            }
        }
        CHECK(soft_rows == 6);  // +-output over i = 1..3
        // final row is sigma >= 0
        CHECK(qp.G(qp.constraints() - 1, 4) == -1.0);
    }
}

TEST_CASE("sigma stays zero when the hard problem is feasible") {
    std::mt19937 rng(71);
    const auto model = scalar_model(0.9, 0.4);
    auto cfg = basic_config(1, 1, 1, 6, 3);
    cfg.Nc = 4;
    cfg.bounds.ymin[0] = -10.0;
    cfg.bounds.ymax[0] = 10.0;
    cfg.soft_output = true;
    cfg.rho = 1e5;
    MpcController soft_ctrl(condense(model, cfg));

    cfg.soft_output = false;
    MpcController hard_ctrl(condense(model, cfg));

    for (int trial = 0; trial < 20; ++trial) {
        const Vector x = oracles::random_matrix(rng, 1, 1, 3.0);
        const auto hard = hard_ctrl.step(x);
        const auto soft = soft_ctrl.step(x);
        REQUIRE(soft.qp_status == QpStatus::optimal);
        if (hard.qp_status == QpStatus::optimal) {
            CHECK(soft.sigma < 1e-6);
            CHECK((soft.u_applied - hard.u_applied).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}

TEST_CASE("config validation rejects bad horizons and weights") {
    const auto model = scalar_model(1.0, 1.0);
    auto cfg = basic_config(1, 1, 1, 4, 2);
    cfg.Nu = 5;
    CHECK_THROWS(condense(model, cfg));
    cfg = basic_config(1, 1, 1, 4, 2);
    cfg.Nc = 4;  // must be <= N-1
    CHECK_THROWS(condense(model, cfg));
    cfg = basic_config(1, 1, 1, 4, 2);
    cfg.R = Matrix::Zero(1, 1);  // not PD
    CHECK_THROWS(condense(model, cfg));
}
