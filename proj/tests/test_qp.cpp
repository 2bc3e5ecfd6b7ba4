#include "doctest.h"

#include <chrono>
#include <random>

#include "ilmpc/qp.hpp"
#include "oracles.hpp"

using namespace ilmpc;

namespace {

QpProblem random_feasible_qp(std::mt19937& rng, int nz, int nq) {
    QpProblem p;
    const Matrix m = oracles::random_matrix(rng, nz, nz);
    p.H = m.transpose() * m + Matrix::Identity(nz, nz);
    p.f = oracles::random_matrix(rng, nz, 1);
    p.G = oracles::random_matrix(rng, nq, nz);
    const Vector z0 = oracles::random_matrix(rng, nz, 1);
    Vector slack = oracles::random_matrix(rng, nq, 1).cwiseAbs();
    p.w = p.G * z0 + slack;  // z0 strictly feasible
    return p;
}

}  // namespace

TEST_CASE("unconstrained minimum") {
    QpProblem p;
    p.H = Matrix::Constant(1, 1, 1.0);
    p.f = Vector::Constant(1, -1.0);
    p.G = Matrix(0, 1);
    p.w = Vector(0);
    const auto s = QpSolver{}.solve(p);
    REQUIRE(s.status == QpStatus::optimal);
    CHECK(s.z[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.objective == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(s.active_set.empty());
}

TEST_CASE("clipped minimum activates the bound") {
    QpProblem p;
    p.H = Matrix::Constant(1, 1, 1.0);
    p.f = Vector::Constant(1, -1.0);
    p.G = Matrix::Constant(1, 1, 1.0);
    p.w = Vector::Constant(1, 0.5);
    const auto s = QpSolver{}.solve(p);
    REQUIRE(s.status == QpStatus::optimal);
    CHECK(s.z[0] == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(s.active_set.size() == 1);
    CHECK(s.active_set[0] == 0);
    CHECK(s.multipliers[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("infeasible constraints are detected") {
    QpProblem p;
    p.H = Matrix::Identity(1, 1);
    p.f = Vector::Zero(1);
    p.G = Matrix(2, 1);
    p.G << 1.0, -1.0;
    p.w = Vector(2);
    p.w << -1.0, -1.0;  // z <= -1 and z >= 1
    const auto s = QpSolver{}.solve(p);
    CHECK(s.status == QpStatus::infeasible);
}

TEST_CASE("rejects indefinite or malformed problems") {
    QpProblem p;
    p.H = -Matrix::Identity(2, 2);
    p.f = Vector::Zero(2);
    p.G = Matrix(0, 2);
    p.w = Vector(0);
    CHECK_THROWS(QpSolver{}.solve(p));
    p.H = Matrix::Identity(2, 2);
    p.f = Vector::Zero(3);
    CHECK_THROWS(QpSolver{}.solve(p));
}

TEST_CASE("200 random problems match the enumeration oracle") {
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> nz_dist(1, 8), nq_dist(1, 16);
    QpSolver solver;
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 200; ++trial) {
        const int nz = nz_dist(rng), nq = nq_dist(rng);
        QpProblem p = random_feasible_qp(rng, nz, nq);
        const auto want = oracles::enumerate_qp(p.H, p.f, p.G, p.w);
        REQUIRE(want.has_value());
        const auto s = solver.solve(p);
        REQUIRE(s.status == QpStatus::optimal);
        CHECK((s.z - *want).cwiseAbs().maxCoeff() < 1e-6);

        // KKT residual at the returned point
        const Vector grad = p.H * s.z + p.f + p.G.transpose() * s.multipliers;
        CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
        CHECK((p.G * s.z - p.w).maxCoeff() < 1e-7);
        CHECK(s.multipliers.minCoeff() > -1e-9);
        for (int i = 0; i < p.constraints(); ++i) {
            const double slack = p.w[i] - p.G.row(i).dot(s.z);
            CHECK(std::abs(s.multipliers[i] * slack) < 1e-8);
        }
    }
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(std::chrono::duration<double>(elapsed).count() < 10.0);
}

TEST_CASE("warm start reproduces the cold solution") {
    std::mt19937 rng(99);
    QpSolver solver;
    for (int trial = 0; trial < 50; ++trial) {
        QpProblem p = random_feasible_qp(rng, 5, 12);
        const auto cold = solver.solve(p);
        REQUIRE(cold.status == QpStatus::optimal);

        // warm start with the optimal set, and with a deliberately wrong set
        const auto warm = solver.solve(p, &cold.active_set);
        REQUIRE(warm.status == QpStatus::optimal);
        CHECK((warm.z - cold.z).cwiseAbs().maxCoeff() < 1e-8);

        std::vector<int> wrong{0, 3, 7};
        const auto warm2 = solver.solve(p, &wrong);
        REQUIRE(warm2.status == QpStatus::optimal);
        CHECK((warm2.z - cold.z).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("objective at the solution beats random feasible points") {
    std::mt19937 rng(5);
    QpSolver solver;
    QpProblem p = random_feasible_qp(rng, 4, 10);
    const auto s = solver.solve(p);
    REQUIRE(s.status == QpStatus::optimal);

    // Sample feasible points by damped projection toward satisfied rows.
    int found = 0;
    for (int k = 0; k < 1000 && found < 100; ++k) {
        Vector z = oracles::random_matrix(rng, 4, 1, 2.0);
        for (int pass = 0; pass < 50; ++pass) {
            for (int i = 0; i < p.constraints(); ++i) {
                const double v = p.G.row(i).dot(z) - p.w[i];
                if (v > 0)
                    z -= v * p.G.row(i).transpose() / p.G.row(i).squaredNorm();
            }
        }
        if ((p.G * z - p.w).maxCoeff() > 1e-9) continue;
        ++found;
        const double obj = 0.5 * z.dot(p.H * z) + p.f.dot(z);
        CHECK(s.objective <= obj + 1e-9);
    }
    CHECK(found == 100);
}
