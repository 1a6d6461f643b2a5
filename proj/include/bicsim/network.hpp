#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bicsim/generator.hpp"

namespace bicsim {

using Complex = std::complex<double>;

/// Transmission line between two buses, series impedance r + jx plus total
/// charging susceptance b (pi model, jb/2 at each end).
struct Line {
    int from = 0;
    int to = 0;
    double resistance = 0.0;
    double reactance = 0.0;
    double shunt_susceptance = 0.0;
};

/// Constant shunt admittance representing a load.
struct LoadAdmittance {
    int bus = 0;
    Complex admittance{0.0, 0.0};
};

/// N x N complex nodal admittance matrix.
struct AdmittanceMatrix {
    Eigen::MatrixXcd m;

    int size() const { return static_cast<int>(m.rows()); }
};

/// Everything the rest of the model needs to know about one machine's
/// electrical interface after a network solve. Machine-frame quantities carry
/// lowercase dq subscripts, common-frame ones uppercase.
struct ElectricalInterface {
    double i_d = 0.0, i_q = 0.0;
    double psi_d = 0.0, psi_q = 0.0;
    double v_d = 0.0, v_q = 0.0;
    double i_D = 0.0, i_Q = 0.0;
    double v_D = 0.0, v_Q = 0.0;
    Complex i_g{0.0, 0.0};
    double t_e = 0.0;
    double p = 0.0;
    double q = 0.0;
};

/// Solved algebraic network state for fixed rotor angles and transient emfs.
struct NetworkSolution {
    Eigen::VectorXcd bus_voltages;
    std::vector<ElectricalInterface> per_generator;
    double residual_inf = 0.0;
};

/// Rotor angle and transient emf of a machine, the inputs the network solve needs.
struct GenPoint {
    double delta = 0.0;
    double e_q_prime = 0.0;
};

/// Nodal assembly: series admittance y = 1/(r + jx) per line, shunts and
/// load/generator admittances on the diagonal.
AdmittanceMatrix build_admittance(int n_buses, std::span<const Line> lines,
                                  std::span<const LoadAdmittance> loads,
                                  std::span<const std::pair<int, Complex>> generator_shunts);

/// Solves the stator algebra
///   ra iq = Xd' id + Eq' - vq
///   ra id = -Xq' iq - vd
/// for (id, iq).
std::pair<double, double> stator_currents(double e_q_prime, double v_d, double v_q,
                                          const GeneratorParams& p);

/// Machine dq frame -> common frame: xQ + j xD = (xq + j xd) e^{j delta}.
std::pair<double, double> rotate_to_common(double x_q, double x_d, double delta);

/// Generator seen as a current injection source: iQ + j iD + (vQ + j vD)/ra.
Complex injection_current(double i_Q, double i_D, double v_Q, double v_D, double r_a);

/// Electrical torque psi_d iq - psi_q id.
inline double electrical_torque(double psi_d, double psi_q, double i_d, double i_q) {
    return psi_d * i_q - psi_q * i_d;
}

/// Solves the coupled network + stator algebra for fixed (delta, Eq') per
/// machine. The stator relations are affine in the bus voltage, so the whole
/// problem folds into one linear solve; afterwards I = YV holds with I the
/// generator injections (zero at load buses). `y` must already contain the
/// 1/ra generator shunts.
NetworkSolution solve_network(const AdmittanceMatrix& y, std::span<const GenPoint> gen_states,
                              std::span<const GeneratorParams> gen_params,
                              std::span<const int> gen_bus);

} // namespace bicsim
