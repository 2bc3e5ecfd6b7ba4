#include "ilmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ilmpc {

namespace {
constexpr double kMinEig = 1e-9;       // PD floor on the symmetrized H
constexpr double kFeasTol = 1e-9;      // constraint activation tolerance
constexpr double kStepTol = 1e-12;     // zero-slope / zero-rate tolerance
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void QpProblem::validate() {
    if (H.rows() != H.cols()) throw std::invalid_argument("qp: H not square");
    const auto nz = H.rows();
    if (f.size() != nz) throw std::invalid_argument("qp: f size mismatch");
    if (G.size() > 0 && G.cols() != nz)
        throw std::invalid_argument("qp: G column count mismatch");
    if (w.size() != G.rows()) throw std::invalid_argument("qp: w size mismatch");
    if (!H.allFinite() || !f.allFinite() || !G.allFinite() || !w.allFinite())
        throw std::invalid_argument("qp: non-finite entry");

    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < kMinEig)
        throw std::invalid_argument("qp: H not positive definite");
}

QpSolution QpSolver::solve(QpProblem p, const std::vector<int>* warm_start) {
    p.validate();
    const int nz = p.vars();
    const int nq = p.constraints();
    const int max_changes = 50 * (nz + nq);

    llt_.compute(p.H);
    if (llt_.info() != Eigen::Success)
        throw std::invalid_argument("qp: Cholesky of H failed");

    QpSolution sol;
    sol.z = llt_.solve(-p.f);
    sol.multipliers = Vector::Zero(nq);

    std::vector<int> active;          // indices into constraint rows
    Vector lambda = Vector::Zero(0);  // multipliers of active constraints
    Matrix hinv_gt(nz, 0);            // H^{-1} g_k for each active k
    Matrix g_active(0, nz);

    auto rebuild_active = [&](const std::vector<int>& idx, const Vector& lam) {
        active = idx;
        lambda = lam;
        g_active.resize(static_cast<Eigen::Index>(active.size()), nz);
        hinv_gt.resize(nz, static_cast<Eigen::Index>(active.size()));
        for (size_t k = 0; k < active.size(); ++k) {
            g_active.row(static_cast<Eigen::Index>(k)) = p.G.row(active[k]);
            hinv_gt.col(static_cast<Eigen::Index>(k)) =
                llt_.solve(p.G.row(active[k]).transpose());
        }
    };

    int changes = 0;
    auto finish = [&](QpStatus status) {
        sol.status = status;
        sol.iterations = changes;
        sol.objective = 0.5 * sol.z.dot(p.H * sol.z) + p.f.dot(sol.z);
        sol.active_set = active;
        std::sort(sol.active_set.begin(), sol.active_set.end());
        sol.multipliers.setZero();
        for (size_t k = 0; k < active.size(); ++k)
            sol.multipliers[active[k]] = lambda[static_cast<Eigen::Index>(k)];
        return sol;
    };

    while (true) {
        // Pick the next violated constraint: warm-start order first, then
        // most-violated with lowest index breaking ties.
        int incoming = -1;
        if (warm_start) {
            for (int idx : *warm_start) {
                if (idx < 0 || idx >= nq) continue;
                if (std::find(active.begin(), active.end(), idx) != active.end())
                    continue;
                if (p.G.row(idx).dot(sol.z) - p.w[idx] > kFeasTol) {
                    incoming = idx;
                    break;
                }
            }
        }
        if (incoming < 0) {
            double worst = kFeasTol;
            for (int i = 0; i < nq; ++i) {
                if (std::find(active.begin(), active.end(), i) != active.end())
                    continue;
                const double v = p.G.row(i).dot(sol.z) - p.w[i];
                if (v > worst) {
                    worst = v;
                    incoming = i;
                }
            }
        }
        if (incoming < 0) return finish(QpStatus::optimal);

        const Vector g_in = p.G.row(incoming).transpose();
        double lambda_in = 0.0;

        // Inner loop: move toward satisfying `incoming`, dropping active
        // constraints whose multipliers would turn negative.
        while (true) {
            const Eigen::Index na = static_cast<Eigen::Index>(active.size());
            Vector dlambda(na);
            Vector dz;
            const Vector hinv_gin = llt_.solve(g_in);
            if (na > 0) {
                const Matrix schur = g_active * hinv_gt;  // G_A H^{-1} G_A'
                dlambda = schur.ldlt().solve(-(g_active * hinv_gin));
                dz = -(hinv_gin + hinv_gt * dlambda);
            } else {
                dz = -hinv_gin;
            }

            const double violation = g_in.dot(sol.z) - p.w[incoming];
            const double slope = g_in.dot(dz);
            const double t_primal =
                (slope < -kStepTol) ? violation / (-slope) : kInf;

            double t_dual = kInf;
            Eigen::Index drop = -1;
            for (Eigen::Index k = 0; k < na; ++k) {
                if (dlambda[k] < -kStepTol) {
                    const double t = -lambda[k] / dlambda[k];
                    if (t < t_dual) {
                        t_dual = t;
                        drop = k;
                    }
                }
            }

            const double t = std::min(t_primal, t_dual);
            if (!std::isfinite(t)) return finish(QpStatus::infeasible);

            if (dz.size() > 0) sol.z += t * dz;
            if (na > 0) lambda += t * dlambda;
            lambda_in += t;

            if (++changes > max_changes) return finish(QpStatus::iteration_limit);

            if (t_primal <= t_dual) {
                // incoming becomes active
                std::vector<int> idx = active;
                idx.push_back(incoming);
                Vector lam(na + 1);
                lam.head(na) = lambda;
                lam[na] = lambda_in;
                rebuild_active(idx, lam);
                break;
            }
            // drop the blocking constraint and keep working on `incoming`
            std::vector<int> idx = active;
            idx.erase(idx.begin() + drop);
            Vector lam(na - 1);
            Eigen::Index j = 0;
            for (Eigen::Index k = 0; k < na; ++k)
                if (k != drop) lam[j++] = lambda[k];
            rebuild_active(idx, lam);
        }
    }
}

}  // namespace ilmpc
