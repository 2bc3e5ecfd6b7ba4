#include "ilmpc/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ilmpc {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

bool is_psd(const Matrix& M, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()),
                                              Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -tol;
}

bool is_pd(const Matrix& M, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (M + M.transpose()),
                                              Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() > tol;
}

}  // namespace

void MpcConfig::validate(int n, int m, int p) const {
    require(N >= 1, "mpc: N must be >= 1");
    require(Nu >= 1 && Nu <= N, "mpc: need 1 <= Nu <= N");
    require(Ncu >= 0 && Ncu <= N, "mpc: need Ncu <= N");
    require(Nc >= 0 && Nc <= N - 1, "mpc: need Nc <= N-1");
    require(Q.rows() == n && Q.cols() == n, "mpc: Q must be n x n");
    require(R.rows() == m && R.cols() == m, "mpc: R must be m x m");
    require(P.rows() == n && P.cols() == n, "mpc: P must be n x n");
    require(Kf.rows() == m && Kf.cols() == n, "mpc: Kf must be m x n");
    require(is_psd(Q, 1e-10), "mpc: Q must be PSD");
    require(is_pd(R, 0.0), "mpc: R must be PD");
    require(is_psd(P, 1e-10), "mpc: P must be PSD");
    bounds.validate(n, m, p);
    if (soft_output) require(rho > 0.0, "mpc: rho must be positive");
}

CondensedMpc condense(const DiscreteStateSpace& model, const MpcConfig& cfg) {
    model.validate();
    const int n = model.states();
    const int m = model.inputs();
    const int p = model.outputs();
    cfg.validate(n, m, p);

    const int N = cfg.N, Nu = cfg.Nu;
    const Matrix Acl = model.A + model.B * cfg.Kf;

    // Stacked prediction x(i) = M_i x(0) + S_i U, i = 1..N, where the input
    // is free for i < Nu and u = Kf x afterwards.
    Matrix M(N * n, n);
    Matrix S = Matrix::Zero(N * n, Nu * m);
    Matrix Mi = Matrix::Identity(n, n);
    Matrix Si = Matrix::Zero(n, Nu * m);
    for (int i = 0; i < N; ++i) {
        if (i < Nu) {
            Si = model.A * Si;
            Si.middleCols(i * m, m) += model.B;
            Mi = model.A * Mi;
        } else {
            Si = Acl * Si;
            Mi = Acl * Mi;
        }
        M.middleRows(i * n, n) = Mi;
        S.middleRows(i * n, n) = Si;
    }

    // Stage weights over x(1..N): Q for i < Nu, Q + Kf'R Kf under the
    // terminal law, P at i = N. The x(0) term is constant and dropped.
    const Matrix Qterm = cfg.Q + cfg.Kf.transpose() * cfg.R * cfg.Kf;
    Matrix Qbar = Matrix::Zero(N * n, N * n);
    for (int i = 1; i < N; ++i)
        Qbar.block((i - 1) * n, (i - 1) * n, n, n) = (i < Nu) ? cfg.Q : Qterm;
    Qbar.block((N - 1) * n, (N - 1) * n, n, n) = cfg.P;

    Matrix Rbar = Matrix::Zero(Nu * m, Nu * m);
    for (int i = 0; i < Nu; ++i) Rbar.block(i * m, i * m, m, m) = cfg.R;

    CondensedMpc c;
    c.n = n;
    c.m = m;
    c.N = N;
    c.Nu = Nu;
    c.soft_output = cfg.soft_output;
    c.rho = cfg.rho;
    c.free_response = M;
    c.forced_response = S;
    c.hessian = 2.0 * (S.transpose() * Qbar * S + Rbar);
    c.gradient_map = 2.0 * S.transpose() * Qbar * M;

    // Constraint rows c_x' x(i) + c_u' u(i) <= bound, rewritten over U with
    // an affine state dependence. Rows with no U dependence must hold
    // unconditionally or are a configuration error.
    std::vector<Eigen::RowVectorXd> rows_u, rows_x;
    std::vector<double> rhs;
    std::vector<bool> soft;

    auto state_block = [&](int i, Eigen::RowVectorXd& su,
                           Eigen::RowVectorXd& sx, const Eigen::RowVectorXd& cx) {
        // contribution of c_x' x(i)
        if (i == 0) {
            su.setZero();
            sx = cx;
        } else {
            su = cx * S.middleRows((i - 1) * n, n);
            sx = cx * M.middleRows((i - 1) * n, n);
        }
    };

    auto add_row = [&](const Eigen::RowVectorXd& cx, const Eigen::RowVectorXd& cu,
                       int i, double bound, bool soft_flag) {
        if (!std::isfinite(bound)) return;
        Eigen::RowVectorXd ru = Eigen::RowVectorXd::Zero(Nu * m);
        Eigen::RowVectorXd rx = Eigen::RowVectorXd::Zero(n);
        if (cx.size() > 0) state_block(i, ru, rx, cx);
        if (cu.size() > 0) {
            if (i < Nu) {
                ru.segment(i * m, m) += cu;
            } else {
                Eigen::RowVectorXd eff = cu * cfg.Kf;  // u(i) = Kf x(i)
                Eigen::RowVectorXd su(Nu * m), sx(n);
                state_block(i, su, sx, eff);
                ru += su;
                rx += sx;
            }
        }
        if (ru.cwiseAbs().maxCoeff() == 0.0 && rx.cwiseAbs().maxCoeff() == 0.0) {
            require(bound >= 0.0, "mpc: constant constraint row infeasible");
            return;
        }
        rows_u.push_back(ru);
        rows_x.push_back(rx);
        rhs.push_back(bound);
        soft.push_back(soft_flag);
    };

    const Eigen::RowVectorXd no_cx, no_cu;

    // input bounds, i in [0, Ncu-1]
    for (int i = 0; i < cfg.Ncu; ++i) {
        for (int j = 0; j < m; ++j) {
            Eigen::RowVectorXd ej = Eigen::RowVectorXd::Zero(m);
            ej[j] = 1.0;
            add_row(no_cx, ej, i, cfg.bounds.umax[j], false);
            add_row(no_cx, -ej, i, -cfg.bounds.umin[j], false);
        }
    }
    // state bounds, i in [1, Nc]
    for (int i = 1; i <= cfg.Nc; ++i) {
        for (int j = 0; j < n; ++j) {
            Eigen::RowVectorXd ej = Eigen::RowVectorXd::Zero(n);
            ej[j] = 1.0;
            add_row(ej, no_cu, i, cfg.bounds.xmax[j], false);
            add_row(-ej, no_cu, i, -cfg.bounds.xmin[j], false);
        }
    }
    // output bounds, i in [1, Nc]; these soften when soft_output is set
    for (int i = 1; i <= cfg.Nc; ++i) {
        for (int j = 0; j < p; ++j) {
            const Eigen::RowVectorXd cj = model.C.row(j);
            const Eigen::RowVectorXd dj = model.D.row(j);
            add_row(cj, dj, i, cfg.bounds.ymax[j], cfg.soft_output);
            add_row(-cj, -dj, i, -cfg.bounds.ymin[j], cfg.soft_output);
        }
    }

    const int nq = static_cast<int>(rows_u.size());
    c.constraint_G.resize(nq, Nu * m);
    c.constraint_Wx.resize(nq, n);
    c.constraint_w0.resize(nq);
    for (int r = 0; r < nq; ++r) {
        c.constraint_G.row(r) = rows_u[r];
        c.constraint_Wx.row(r) = -rows_x[r];  // G U <= w0 + Wx x
        c.constraint_w0[r] = rhs[r];
    }
    c.soft_row = std::move(soft);
    return c;
}

Vector CondensedMpc::predict(const Vector& x_now, const Vector& u_seq) const {
    return free_response * x_now + forced_response * u_seq;
}

QpProblem assemble_qp(const CondensedMpc& c, const Vector& x_now) {
    if (x_now.size() != c.n || !x_now.allFinite())
        throw std::invalid_argument("mpc: bad state vector");

    const int nu = c.Nu * c.m;
    const int nz = c.decision_dim();
    const int nq = static_cast<int>(c.constraint_G.rows());

    QpProblem p;
    p.H = Matrix::Zero(nz, nz);
    p.H.topLeftCorner(nu, nu) = c.hessian;
    p.f = Vector::Zero(nz);
    p.f.head(nu) = c.gradient_map * x_now;

    if (!c.soft_output) {
        p.G = c.constraint_G;
        p.w = c.constraint_w0 + c.constraint_Wx * x_now;
        return p;
    }

    p.H(nu, nu) = 2.0 * c.rho;  // cost convention 1/2 z'Hz gives rho sigma^2
    p.G = Matrix::Zero(nq + 1, nz);
    p.G.topLeftCorner(nq, nu) = c.constraint_G;
    for (int r = 0; r < nq; ++r)
        if (c.soft_row[r]) p.G(r, nu) = -1.0;
    p.G(nq, nu) = -1.0;  // sigma >= 0
    p.w = Vector::Zero(nq + 1);
    p.w.head(nq) = c.constraint_w0 + c.constraint_Wx * x_now;
    return p;
}

ControlStep MpcController::step(const Vector& x_now) {
    QpProblem p = assemble_qp(condensed_, x_now);
    QpSolution s = solver_.solve(std::move(p), warm_.empty() ? nullptr : &warm_);

    ControlStep out;
    out.qp_status = s.status;
    out.qp_iterations = s.iterations;
    if (s.status == QpStatus::optimal) {
        warm_ = s.active_set;
        const int nu = condensed_.Nu * condensed_.m;
        out.input_sequence = s.z.head(nu);
        out.u_applied = s.z.head(condensed_.m);
        out.sigma = condensed_.soft_output ? std::max(0.0, s.z[nu]) : 0.0;
        out.predicted_states = condensed_.predict(x_now, out.input_sequence);
    }
    return out;
}

}  // namespace ilmpc
