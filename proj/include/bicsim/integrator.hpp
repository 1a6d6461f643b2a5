#pragma once

#include <sstream>

#include <Eigen/Dense>

#include "bicsim/errors.hpp"

namespace bicsim {

/// One classical 4th-order Runge-Kutta step of dx/dt = f(t, x).
template <typename Deriv>
Eigen::VectorXd rk4_step(Deriv&& f, double t, double dt, const Eigen::VectorXd& x) {
    if (!(dt > 0.0)) throw ValidationError("rk4_step: dt must be positive");
    const Eigen::VectorXd k1 = f(t, x);
    const Eigen::VectorXd k2 = f(t + dt / 2.0, x + (dt / 2.0) * k1);
    const Eigen::VectorXd k3 = f(t + dt / 2.0, x + (dt / 2.0) * k2);
    const Eigen::VectorXd k4 = f(t + dt, x + dt * k3);
    Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        std::ostringstream os;
        os << "rk4_step: non-finite state at t = " << t + dt;
        throw NumericalError(os.str());
    }
    return next;
}

} // namespace bicsim
