#pragma once

#include <span>
#include <vector>

#include "bicsim/network.hpp"
#include "bicsim/power_flow.hpp"

namespace bicsim {

/// One machine's steady state recovered from its terminal conditions.
struct BackSolveResult {
    GeneratorState state;
    double t_m_nominal = 0.0;
    double e_f_nominal = 0.0;
    ElectricalInterface interface;
};

/// Pre-controller steady state of the whole system.
struct EquilibriumPoint {
    std::vector<GeneratorState> gen_states;
    Eigen::VectorXd t_m_nominal;
    Eigen::VectorXd e_f_nominal;
    Eigen::VectorXcd bus_voltages;
};

/// Finds (delta, Eq', Ef, Tm) such that the stator algebra reproduces the
/// given terminal P, Q at the given terminal voltage and all three machine
/// derivatives vanish at omega = omega_s.
BackSolveResult back_solve_generator(Complex terminal_voltage, double p, double q,
                                     const GeneratorParams& params);

/// Runs the load flow on the physical network (lines + loads, no machine
/// shunts) with the slack at `slack_gen`'s bus and PV buses at the remaining
/// generators, then back-solves every machine.
EquilibriumPoint compute_equilibrium(const AdmittanceMatrix& y_network,
                                     std::span<const GeneratorParams> gen_params,
                                     std::span<const int> gen_bus,
                                     std::span<const double> dispatch_p,
                                     std::span<const double> v_setpoint, int slack_gen = 0);

} // namespace bicsim
