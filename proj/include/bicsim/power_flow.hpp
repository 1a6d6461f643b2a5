#pragma once

#include <span>

#include "bicsim/network.hpp"

namespace bicsim {

enum class BusKind { Slack, PV, PQ };

/// Power-flow classification and setpoints for one bus. P/Q setpoints are net
/// injections in the convention P + jQ = V conj(I); constant admittance loads
/// live inside Y and need no setpoint.
struct BusSpec {
    BusKind kind = BusKind::PQ;
    double p_set = 0.0;
    double q_set = 0.0;
    double v_set = 1.0;
};

struct PowerFlowResult {
    Eigen::VectorXcd bus_voltages;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Net complex injection conj(V_bus) * (Y V)_bus.
Complex bus_injection(const AdmittanceMatrix& y, const Eigen::VectorXcd& v, int bus);

/// Newton-Raphson on the polar mismatch equations, flat start. Converged when
/// max |mismatch| < tol.
PowerFlowResult solve_power_flow(const AdmittanceMatrix& y, std::span<const BusSpec> spec,
                                 int max_iterations = 50, double tol = 1e-10);

} // namespace bicsim
