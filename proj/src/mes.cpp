#include "ilmpc/mes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ilmpc {

namespace {
constexpr double kFreqTol = 1e-9;

double wrap_2pi(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(x, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}
}  // namespace

void check_dither_frequencies(const std::vector<double>& omegas, double dt) {
    const size_t np = omegas.size();
    std::vector<double> eff(np);
    for (size_t i = 0; i < np; ++i) eff[i] = wrap_2pi(omegas[i] * dt);

    for (size_t i = 0; i < np; ++i)
        for (size_t j = i + 1; j < np; ++j)
            if (std::abs(eff[i] - eff[j]) < kFreqTol)
                throw std::invalid_argument(
                    "mes: dither frequencies not pairwise distinct");

    for (size_t i = 0; i < np; ++i)
        for (size_t j = 0; j < np; ++j)
            for (size_t k = 0; k < np; ++k) {
                if (i == j || j == k || i == k) continue;
                const double gap =
                    std::abs(wrap_2pi(eff[i] + eff[j]) - eff[k]);
                if (gap < kFreqTol)
                    throw std::invalid_argument(
                        "mes: omega_i + omega_j coincides with omega_k");
            }
}

MesState MesState::make(std::vector<DitherChannel> channels, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("mes: dt must be positive");
    std::vector<double> omegas;
    omegas.reserve(channels.size());
    for (const auto& ch : channels) {
        if (!(ch.amplitude > 0.0))
            throw std::invalid_argument("mes: amplitude must be positive");
        if (!(ch.omega > 0.0))
            throw std::invalid_argument("mes: omega must be positive");
        omegas.push_back(ch.omega);
    }
    check_dither_frequencies(omegas, dt);

    MesState s;
    s.channels = std::move(channels);
    s.dt = dt;
    return s;
}

MesState mes_update(const MesState& s, double cost) {
    if (!std::isfinite(cost) || cost < 0.0)
        throw std::invalid_argument("mes: cost must be finite and >= 0");

    const double half_pi = 0.5 * std::numbers::pi;
    MesState next = s;
    const double phase_base = static_cast<double>(s.h) * s.dt;
    for (auto& ch : next.channels) {
        const double phase = ch.omega * phase_base;
        ch.z += ch.amplitude * s.dt * std::sin(phase + half_pi) * cost;
        ch.delta_hat = ch.z + ch.amplitude * std::sin(phase - half_pi);
    }
    next.h = s.h + 1;
    return next;
}

}  // namespace ilmpc
