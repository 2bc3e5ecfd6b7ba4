#pragma once

#include <vector>

#include "ilmpc/lti.hpp"

namespace ilmpc {

/// One sinusoidal perturbation channel estimating one uncertain parameter.
struct DitherChannel {
    double amplitude = 0.0;  // a, in the parameter's units
    double omega = 0.0;      // rad/s
    double z = 0.0;          // integrator state
    double delta_hat = 0.0;  // current estimate
};

/// Extremum-seeking state: all channels plus the iteration counter h.
/// dt is the learning-iteration period (delta T_mes).
struct MesState {
    std::vector<DitherChannel> channels;
    long h = 0;
    double dt = 0.0;

    /// Validates amplitudes, frequencies, and the dither-frequency
    /// conditions; throws std::invalid_argument on violation.
    static MesState make(std::vector<DitherChannel> channels, double dt);
};

/// Dither-frequency conditions evaluated on the effective discrete
/// frequencies omega_i * dt mod 2 pi: pairwise distinct and no
/// omega_i + omega_j = omega_k for distinct i, j, k.
void check_dither_frequencies(const std::vector<double>& omegas, double dt);

/// One step of the discrete update law:
///   z_i    <- z_i + a_i dt sin(omega_i h dt + pi/2) Q
///   dhat_i <- z_i + a_i sin(omega_i h dt - pi/2)
/// applied per channel, then h <- h + 1.
MesState mes_update(const MesState& s, double cost);

}  // namespace ilmpc
