#pragma once

#include <cmath>

#include "bicsim/errors.hpp"

namespace bicsim {

inline constexpr double kDefaultBaseFrequencyHz = 60.0;

/// Machine constants of the 3rd-order synchronous generator model, all per unit
/// on the system base except the time constants (seconds).
struct GeneratorParams {
    double inertia = 6.5;        ///< H, s
    double damping = 2.0;        ///< D, pu torque per pu slip
    double t_d0_prime = 8.0;     ///< d-axis open-circuit transient time constant, s
    double x_d = 1.8;            ///< d-axis synchronous reactance
    double x_d_prime = 0.3;      ///< d-axis transient reactance
    double x_q_prime = 0.55;     ///< q-axis transient reactance
    double r_a = 0.0025;         ///< armature resistance
    double omega_b = 2.0 * M_PI * kDefaultBaseFrequencyHz; ///< base angular velocity, rad/s
    double omega_s = 1.0;        ///< synchronous angular velocity, pu

    void validate() const {
        if (!(inertia > 0.0)) throw ValidationError("generator: inertia H must be > 0");
        if (!(t_d0_prime > 0.0)) throw ValidationError("generator: Td0' must be > 0");
        if (!(x_d_prime > 0.0) || x_d < x_d_prime)
            throw ValidationError("generator: require Xd >= Xd' > 0");
        if (!(r_a > 0.0)) throw ValidationError("generator: armature resistance ra must be > 0");
    }
};

/// The three dynamic states of one machine.
struct GeneratorState {
    double delta = 0.0;      ///< rotor angle, rad
    double omega = 1.0;      ///< angular velocity, pu
    double e_q_prime = 1.0;  ///< q-axis transient emf, pu
};

struct GeneratorDerivatives {
    double d_delta;
    double d_omega;
    double d_e_q_prime;
};

/// Right-hand side of the 3rd-order machine model:
///   d(delta)/dt = omega_b (omega - omega_s)
///   2H d(omega)/dt = Tm - Te - D (omega - omega_s)
///   Td0' d(Eq')/dt = Ef - Eq' + (Xd - Xd') id
inline GeneratorDerivatives generator_derivatives(const GeneratorState& s, double t_m,
                                                  double e_f, double i_d, double t_e,
                                                  const GeneratorParams& p) {
    const double slip = s.omega - p.omega_s;
    return {
        p.omega_b * slip,
        (t_m - t_e - p.damping * slip) / (2.0 * p.inertia),
        (e_f - s.e_q_prime + (p.x_d - p.x_d_prime) * i_d) / p.t_d0_prime,
    };
}

} // namespace bicsim
