#include "ilmpc/servo.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ilmpc::servo {

namespace {

constexpr double kInertiaFloor = 1e-2;  // [kg m^2], rebuild clamp

// Measured baseline learning-window cost of the nominal closed loop
// (steady-state window, N_E = 942 steps at dt = 0.1 s). The epsilon_Q
// threshold is 1.5x this value.
constexpr double kQNominalSteady = 60162.770291615678;

Matrix augmented_state_weight(const DiscreteStateSpace& aug, double q_y) {
    // Weight on the load-angle tracking error output (row 2 of the
    // augmented output map: [y1, y2, ye1, ye2]).
    Matrix w = Matrix::Zero(aug.outputs(), aug.outputs());
    w(2, 2) = q_y;
    return aug.C.transpose() * w * aug.C;
}

}  // namespace

void ServoParams::validate() const {
    // Friction coefficients may be negative (the studied uncertainty drives
    // beta_l below zero); everything that divides or scales must stay positive.
    if (!(R_A > 0.0 && K_m > 0.0 && J_l > 0.0 && k_l > 0.0 && J_m > 0.0 &&
          gear > 0.0))
        throw std::invalid_argument(
            "servo: R_A, K_m, J_l, k_l, J_m, gear must be positive");
}

ContinuousStateSpace build_servo_model(const ServoParams& p) {
    p.validate();
    ContinuousStateSpace sys;
    sys.A = Matrix::Zero(4, 4);
    sys.A(0, 1) = 1.0;
    sys.A(1, 0) = -p.k_l / p.J_l;
    sys.A(1, 1) = -p.beta_l / p.J_l;
    sys.A(1, 2) = p.k_l / (p.gear * p.J_l);
    sys.A(2, 3) = 1.0;
    sys.A(3, 0) = p.k_l / (p.gear * p.J_m);
    sys.A(3, 2) = -p.k_l / (p.gear * p.gear * p.J_m);
    sys.A(3, 3) = -(p.beta_m + p.K_m * p.K_m / p.R_A) / p.J_m;

    sys.B = Matrix::Zero(4, 1);
    sys.B(3, 0) = p.K_m / (p.R_A * p.J_m);

    sys.C = Matrix::Zero(2, 4);
    sys.C(0, 0) = 1.0;
    sys.C(1, 0) = p.k_l;
    sys.C(1, 2) = -p.k_l / p.gear;

    sys.D = Matrix::Zero(2, 1);
    return sys;
}

PlantSim::PlantSim(const ServoParams& true_params, double dt)
    : model_(zoh_discretize(build_servo_model(true_params), dt)),
      x_(Vector::Zero(4)) {}

std::pair<Vector, Vector> PlantSim::step(double u) {
    if (!std::isfinite(u)) throw std::invalid_argument("servo: non-finite input");
    const Vector u_vec = Vector::Constant(1, u);
    const Vector y = model_.C * x_ + model_.D * u_vec;
    x_ = model_.A * x_ + model_.B * u_vec;
    t_ += model_.dt;
    return {x_, y};
}

std::vector<Scenario> canned_scenarios() {
    Scenario nominal;
    nominal.name = "nominal";
    nominal.q_nominal = kQNominalSteady;

    Scenario single = nominal;
    single.name = "single";
    single.true_params.beta_l += -70.0;  // beta_l = -45, negative damping
    single.learned = {{"beta_l", 1e-6, 0.7}};

    Scenario dual = single;
    dual.name = "double";
    dual.true_params.J_l += -0.2;
    dual.learned = {{"beta_l", 1e-6, 0.7}, {"J_l", 1e-8, 0.8}};

    return {nominal, single, dual};
}

Scenario find_scenario(const std::string& name) {
    for (auto& sc : canned_scenarios())
        if (sc.name == name) return sc;
    throw std::invalid_argument("servo: unknown scenario '" + name + "'");
}

ContinuousStateSpace assumed_model(const Scenario& sc) {
    return build_servo_model(sc.assumed_params);
}

LoopSetup make_loop(const Scenario& sc) {
    LoopSetup loop;
    loop.true_plant = zoh_discretize(build_servo_model(sc.true_params), sc.dt_mpc);
    loop.ref.Ar = Matrix::Identity(1, 1);
    loop.ref.Cr = Matrix::Zero(2, 1);
    loop.ref.Cr(0, 0) = 1.0;  // reference enters the load-angle output only
    loop.ref.rr = Vector::Zero(1);
    loop.incremental = true;
    const double amp = sc.ref_amplitude;
    const double period = sc.ref_period;
    loop.reference = [amp, period](double t) {
        return Vector::Constant(1, amp * std::sin(2.0 * M_PI * t / period));
    };
    return loop;
}

MpcFactory make_mpc_factory(const Scenario& sc) {
    const double dt = sc.dt_mpc;
    const MpcSettings m = sc.mpc;
    const double torque_bound = sc.torque_bound;
    const double voltage_bound = sc.voltage_bound;
    ReferenceModel ref;
    ref.Ar = Matrix::Identity(1, 1);
    ref.Cr = Matrix::Zero(2, 1);
    ref.Cr(0, 0) = 1.0;
    ref.rr = Vector::Zero(1);

    return [=](const ContinuousStateSpace& model) {
        const DiscreteStateSpace plant = zoh_discretize(model, dt);
        const AugmentedModel aug = augment_for_tracking(plant, ref, true);
        const int n = aug.model.states();   // 6
        const int mm = aug.model.inputs();  // 1
        const int p = aug.model.outputs();  // 4

        MpcConfig cfg;
        cfg.N = m.N;
        cfg.Nu = m.Nu;
        cfg.Ncu = m.Ncu;
        cfg.Nc = m.Nc;
        cfg.Q = augmented_state_weight(aug.model, m.Q_y);
        cfg.R = Matrix::Constant(mm, mm, m.R_v);
        cfg.P = cfg.Q;
        cfg.Kf = Matrix::Constant(mm, n, m.Kf);
        cfg.soft_output = true;
        cfg.rho = m.rho;

        cfg.bounds = Bounds::unbounded(n, mm, p);
        // The applied voltage u = u_prev + dv lives in the u_prev state one
        // step ahead, so the hard input limit becomes a state bound.
        cfg.bounds.xmin[aug.uprev_offset()] = -voltage_bound;
        cfg.bounds.xmax[aug.uprev_offset()] = voltage_bound;
        cfg.bounds.ymin[1] = -torque_bound;  // shaft torque, softened
        cfg.bounds.ymax[1] = torque_bound;

        return condense(aug.model, cfg);
    };
}

CostSpec make_cost_spec(const Scenario& sc) {
    CostSpec spec;
    spec.terms = {{0, 1.0, true},   // load-angle error and its velocity
                  {1, 1.0, false}}; // shaft-torque error
    spec.window = sc.steps_per_iteration;
    spec.dt = sc.dt_mpc;
    return spec;
}

MesState make_mes_state(const Scenario& sc) {
    std::vector<DitherChannel> channels;
    for (const auto& lp : sc.learned)
        channels.push_back({lp.amplitude, lp.omega, 0.0, 0.0});
    return MesState::make(std::move(channels), sc.dt_mes());
}

UncertaintyMap make_uncertainty_map(const Scenario& sc) {
    UncertaintyMap map;
    for (const auto& lp : sc.learned) map.names.push_back(lp.name);
    const ServoParams base = sc.assumed_params;
    const auto names = map.names;
    map.rebuild = [base, names](const Vector& delta) {
        ServoParams p = base;
        for (size_t i = 0; i < names.size(); ++i) {
            const double d = delta[static_cast<Eigen::Index>(i)];
            if (names[i] == "beta_l") {
                p.beta_l += d;
            } else if (names[i] == "J_l") {
                p.J_l += d;
                if (p.J_l < kInertiaFloor) {
                    std::cerr << "servo: rebuilt J_l clamped to " << kInertiaFloor
                              << "\n";
                    p.J_l = kInertiaFloor;
                }
            } else {
                throw std::invalid_argument("servo: unknown learned parameter '" +
                                            names[i] + "'");
            }
        }
        return build_servo_model(p);
    };
    return map;
}

LearningConfig make_learning_config(const Scenario& sc) {
    LearningConfig cfg;
    cfg.epsilon_Q = sc.epsilon_q();
    cfg.steps_per_iteration = sc.steps_per_iteration;
    cfg.dt_mpc = sc.dt_mpc;
    cfg.max_iterations = sc.max_iterations;
    return cfg;
}

}  // namespace ilmpc::servo
