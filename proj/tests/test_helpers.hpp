#pragma once

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bicsim/network.hpp"

namespace bicsim::testing {

/// Independent dense 2x2 linear solver (Gaussian elimination with partial
/// pivoting), used as the oracle for the stator current solve.
inline std::pair<double, double> solve_2x2(double a11, double a12, double a21, double a22,
                                           double b1, double b2) {
    if (std::abs(a21) > std::abs(a11)) {
        std::swap(a11, a21);
        std::swap(a12, a22);
        std::swap(b1, b2);
    }
    const double f = a21 / a11;
    const double u22 = a22 - f * a12;
    const double y2 = b2 - f * b1;
    const double x2 = y2 / u22;
    const double x1 = (b1 - a12 * x2) / a11;
    return {x1, x2};
}

/// Stator solve through the independent path: the system
///   -Xd' id + ra iq = Eq' - vq
///    ra  id + Xq' iq = -vd
inline std::pair<double, double> stator_oracle(double e_q_prime, double v_d, double v_q,
                                               const GeneratorParams& p) {
    return solve_2x2(-p.x_d_prime, p.r_a, p.r_a, p.x_q_prime, e_q_prime - v_q, -v_d);
}

/// Direct per-machine injection evaluation (stator solve, rotation, Eq. of the
/// current source), used by the fixed-point network oracle.
inline Complex machine_injection_direct(Complex v_bus, double delta, double e_q_prime,
                                        const GeneratorParams& p) {
    const Complex u = v_bus * std::polar(1.0, -delta);
    const auto [i_d, i_q] = stator_oracle(e_q_prime, u.imag(), u.real(), p);
    const Complex i_m(i_q, i_d);
    return i_m * std::polar(1.0, delta) + v_bus / p.r_a;
}

/// Fixed-point oracle for the network solve: alternate between the stator
/// solve and V = Y^-1 I until the voltages settle. Y must include the 1/ra
/// generator shunts. Converges for the moderately damped test machines used
/// in the suites.
inline Eigen::VectorXcd fixed_point_network_oracle(const AdmittanceMatrix& y,
                                                   const std::vector<GenPoint>& states,
                                                   const std::vector<GeneratorParams>& params,
                                                   const std::vector<int>& gen_bus,
                                                   double tol = 1e-10, int max_iter = 500000) {
    const int n = y.size();
    const Eigen::MatrixXcd y_inv = y.m.inverse();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(n);
        for (std::size_t g = 0; g < states.size(); ++g)
            inj(gen_bus[g]) += machine_injection_direct(v(gen_bus[g]), states[g].delta,
                                                        states[g].e_q_prime, params[g]);
        Eigen::VectorXcd next = y_inv * inj;
        if ((next - v).lpNorm<Eigen::Infinity>() < tol) return next;
        v = next;
    }
    throw std::runtime_error("fixed_point_network_oracle: no convergence");
}

} // namespace bicsim::testing
