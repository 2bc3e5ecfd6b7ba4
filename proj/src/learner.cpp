#include "ilmpc/learner.hpp"

#include <cmath>
#include <stdexcept>

namespace ilmpc {

std::vector<double> error_velocity(const std::vector<double>& e, double dt,
                                   double prior) {
    if (e.size() < 2)
        throw std::invalid_argument("learner: velocity needs >= 2 samples");
    std::vector<double> v(e.size());
    v[0] = (e[0] - prior) / dt;
    for (size_t i = 1; i < e.size(); ++i) v[i] = (e[i] - e[i - 1]) / dt;
    return v;
}

double evaluate_cost(const CostSpec& spec, const Matrix& window,
                     const Vector& prior) {
    if (window.rows() != spec.window)
        throw std::invalid_argument("learner: window length mismatch");
    if (prior.size() != window.cols())
        throw std::invalid_argument("learner: prior size mismatch");

    double q = 0.0;
    for (const auto& term : spec.terms) {
        if (term.output_index < 0 || term.output_index >= window.cols())
            throw std::invalid_argument("learner: cost output index out of range");
        const auto col = window.col(term.output_index);
        q += term.weight * col.squaredNorm();
        if (term.with_derivative) {
            std::vector<double> e(col.data(), col.data() + col.size());
            const auto v = error_velocity(e, spec.dt, prior[term.output_index]);
            for (double vi : v) q += term.weight * vi * vi;
        }
    }
    return q;
}

ContinuousStateSpace rebuild_model(const UncertaintyMap& map,
                                   const Vector& delta_hat) {
    if (delta_hat.size() != map.size())
        throw std::invalid_argument("learner: delta_hat length mismatch");
    return map.rebuild(delta_hat);
}

Matrix clip_spectral_norm(const Matrix& M, double bound) {
    if (M.size() == 0) return M;
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().maxCoeff() <= bound) return M;
    Vector s = svd.singularValues().cwiseMin(bound);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

UncertaintyMap make_elementwise_map(ContinuousStateSpace nominal,
                                    std::vector<ElementEntry> entries,
                                    double l_A, double l_B, double l_C,
                                    double l_D) {
    nominal.validate();
    UncertaintyMap map;
    for (const auto& e : entries) {
        const char* slot = e.slot == MatrixSlot::A   ? "A"
                           : e.slot == MatrixSlot::B ? "B"
                           : e.slot == MatrixSlot::C ? "C"
                                                     : "D";
        map.names.push_back(std::string("d") + slot + "[" +
                            std::to_string(e.row) + "," +
                            std::to_string(e.col) + "]");
    }
    map.rebuild = [nominal = std::move(nominal), entries = std::move(entries),
                   l_A, l_B, l_C, l_D](const Vector& delta) {
        Matrix dA = Matrix::Zero(nominal.A.rows(), nominal.A.cols());
        Matrix dB = Matrix::Zero(nominal.B.rows(), nominal.B.cols());
        Matrix dC = Matrix::Zero(nominal.C.rows(), nominal.C.cols());
        Matrix dD = Matrix::Zero(nominal.D.rows(), nominal.D.cols());
        for (size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            switch (e.slot) {
                case MatrixSlot::A: dA(e.row, e.col) = delta[static_cast<Eigen::Index>(i)]; break;
                case MatrixSlot::B: dB(e.row, e.col) = delta[static_cast<Eigen::Index>(i)]; break;
                case MatrixSlot::C: dC(e.row, e.col) = delta[static_cast<Eigen::Index>(i)]; break;
                case MatrixSlot::D: dD(e.row, e.col) = delta[static_cast<Eigen::Index>(i)]; break;
            }
        }
        ContinuousStateSpace out = nominal;
        out.A += clip_spectral_norm(dA, l_A);
        out.B += clip_spectral_norm(dB, l_B);
        out.C += clip_spectral_norm(dC, l_C);
        out.D += clip_spectral_norm(dD, l_D);
        return out;
    };
    return map;
}

void run_closed_loop(const LoopSetup& loop, MpcController& controller,
                     Vector& x, Vector& u_prev, long& step_index, double dt,
                     int n_steps, LearningTrace& trace) {
    const auto& plant = loop.true_plant;
    const int n = plant.states();
    const int m = plant.inputs();
    const int nr = loop.ref.ref_states();

    Vector x_aug(n + nr + (loop.incremental ? m : 0));
    for (int s = 0; s < n_steps; ++s, ++step_index) {
        const double t = static_cast<double>(step_index) * dt;
        const Vector r = loop.reference(t);

        x_aug.head(n) = x;
        x_aug.segment(n, nr) = r;
        if (loop.incremental) x_aug.tail(m) = u_prev;

        const ControlStep step = controller.step(x_aug);
        if (step.qp_status != QpStatus::optimal) {
            throw std::runtime_error(
                "learner: QP solve failed at step " + std::to_string(step_index) +
                (step.qp_status == QpStatus::infeasible ? " (infeasible)"
                                                        : " (iteration limit)"));
        }
        const Vector u =
            loop.incremental ? Vector(u_prev + step.u_applied) : step.u_applied;

        StepRecord rec;
        rec.t = t;
        rec.x = x;
        rec.u = u;
        rec.y = plant.C * x + plant.D * u;
        rec.r = r;
        rec.ye = rec.y - loop.ref.Cr * r;
        rec.sigma = step.sigma;
        rec.qp_iterations = step.qp_iterations;
        trace.steps.push_back(std::move(rec));

        x = plant.A * x + plant.B * u;
        u_prev = u;
    }
}

LearningTrace run_algorithm_one(const LoopSetup& loop,
                                const MpcFactory& factory,
                                const ContinuousStateSpace& initial_model,
                                MesState mes, const UncertaintyMap& map,
                                const CostSpec& cost, LearningConfig cfg,
                                bool learning) {
    if (cfg.steps_per_iteration <= 0)
        throw std::invalid_argument("learner: N_E must be positive");
    if (cfg.epsilon_Q <= 0.0)
        throw std::invalid_argument("learner: epsilon_Q must be positive");
    if (static_cast<int>(mes.channels.size()) != map.size())
        throw std::invalid_argument("learner: channel count must match map");

    const int n_e = cfg.steps_per_iteration;
    const auto& plant = loop.true_plant;
    const int pe = static_cast<int>(loop.ref.Cr.rows());

    MpcController controller(factory(initial_model));

    LearningTrace trace;
    Vector x = Vector::Zero(plant.states());
    Vector u_prev = Vector::Zero(plant.inputs());
    long step_index = 0;

    auto current_delta = [&mes]() {
        Vector d(static_cast<Eigen::Index>(mes.channels.size()));
        for (size_t i = 0; i < mes.channels.size(); ++i)
            d[static_cast<Eigen::Index>(i)] = mes.channels[i].delta_hat;
        return d;
    };

    for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
        const size_t window_start = trace.steps.size();
        run_closed_loop(loop, controller, x, u_prev, step_index, cfg.dt_mpc,
                        n_e, trace);

        Matrix window(n_e, pe);
        for (int i = 0; i < n_e; ++i)
            window.row(i) = trace.steps[window_start + i].ye.transpose();
        const Vector prior = window_start == 0
                                 ? Vector(Vector::Zero(pe))
                                 : trace.steps[window_start - 1].ye;

        const double q = evaluate_cost(cost, window, prior);
        trace.iteration_cost.push_back(q);
        trace.iteration_delta.push_back(current_delta());
        trace.iterations = iter;

        if (q <= cfg.epsilon_Q) {
            trace.converged = true;
            break;
        }
        if (!learning) continue;

        mes = mes_update(mes, q);
        const ContinuousStateSpace updated = rebuild_model(map, current_delta());
        controller.replace(factory(updated));
    }
    trace.final_delta = current_delta();
    return trace;
}

}  // namespace ilmpc
