#include "bicsim/power_flow.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "bicsim/errors.hpp"

namespace bicsim {

Complex bus_injection(const AdmittanceMatrix& y, const Eigen::VectorXcd& v, int bus) {
    return v(bus) * std::conj((y.m.row(bus) * v)(0, 0));
}

PowerFlowResult solve_power_flow(const AdmittanceMatrix& y, std::span<const BusSpec> spec,
                                 int max_iterations, double tol) {
    const int n = y.size();
    if (static_cast<int>(spec.size()) != n)
        throw ValidationError("power flow: one BusSpec per bus required");

    int n_slack = 0;
    for (const BusSpec& s : spec)
        if (s.kind == BusKind::Slack) ++n_slack;
    if (n_slack != 1) throw ValidationError("power flow: exactly one slack bus required");

    std::vector<int> ang_idx; // buses with an angle unknown (non-slack)
    std::vector<int> mag_idx; // buses with a magnitude unknown (PQ)
    for (int i = 0; i < n; ++i) {
        if (spec[i].kind != BusKind::Slack) ang_idx.push_back(i);
        if (spec[i].kind == BusKind::PQ) mag_idx.push_back(i);
    }
    const int n_ang = static_cast<int>(ang_idx.size());
    const int n_mag = static_cast<int>(mag_idx.size());
    const int n_unknown = n_ang + n_mag;

    // flat start
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = (spec[i].kind == BusKind::PQ) ? 1.0 : spec[i].v_set;

    const Eigen::MatrixXd g = y.m.real();
    const Eigen::MatrixXd b = y.m.imag();

    Eigen::VectorXd p_calc(n), q_calc(n);
    auto evaluate = [&] {
        for (int i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (int k = 0; k < n; ++k) {
                const double t = theta(i) - theta(k);
                const double c = std::cos(t), s = std::sin(t);
                pi += u(i) * u(k) * (g(i, k) * c + b(i, k) * s);
                qi += u(i) * u(k) * (g(i, k) * s - b(i, k) * c);
            }
            p_calc(i) = pi;
            q_calc(i) = qi;
        }
    };

    double max_mismatch = 0.0;
    Eigen::VectorXd mismatch(n_unknown);
    for (int iter = 0; iter <= max_iterations; ++iter) {
        evaluate();
        for (int r = 0; r < n_ang; ++r) mismatch(r) = spec[ang_idx[r]].p_set - p_calc(ang_idx[r]);
        for (int r = 0; r < n_mag; ++r)
            mismatch(n_ang + r) = spec[mag_idx[r]].q_set - q_calc(mag_idx[r]);
        max_mismatch = n_unknown > 0 ? mismatch.lpNorm<Eigen::Infinity>() : 0.0;
        if (max_mismatch < tol) {
            Eigen::VectorXcd v(n);
            for (int i = 0; i < n; ++i) v(i) = std::polar(u(i), theta(i));
            return {v, iter, max_mismatch};
        }
        if (iter == max_iterations) break;

        Eigen::MatrixXd jac(n_unknown, n_unknown);
        for (int r = 0; r < n_ang; ++r) {
            const int i = ang_idx[r];
            for (int c = 0; c < n_ang; ++c) {
                const int j = ang_idx[c];
                if (i == j) {
                    jac(r, c) = -q_calc(i) - u(i) * u(i) * b(i, i);
                } else {
                    const double t = theta(i) - theta(j);
                    jac(r, c) = u(i) * u(j) * (g(i, j) * std::sin(t) - b(i, j) * std::cos(t));
                }
            }
            for (int c = 0; c < n_mag; ++c) {
                const int j = mag_idx[c];
                if (i == j) {
                    jac(r, n_ang + c) = p_calc(i) / u(i) + u(i) * g(i, i);
                } else {
                    const double t = theta(i) - theta(j);
                    jac(r, n_ang + c) = u(i) * (g(i, j) * std::cos(t) + b(i, j) * std::sin(t));
                }
            }
        }
        for (int r = 0; r < n_mag; ++r) {
            const int i = mag_idx[r];
            for (int c = 0; c < n_ang; ++c) {
                const int j = ang_idx[c];
                if (i == j) {
                    jac(n_ang + r, c) = p_calc(i) - u(i) * u(i) * g(i, i);
                } else {
                    const double t = theta(i) - theta(j);
                    jac(n_ang + r, c) = -u(i) * u(j) * (g(i, j) * std::cos(t) + b(i, j) * std::sin(t));
                }
            }
            for (int c = 0; c < n_mag; ++c) {
                const int j = mag_idx[c];
                if (i == j) {
                    jac(n_ang + r, n_ang + c) = q_calc(i) / u(i) - u(i) * b(i, i);
                } else {
                    const double t = theta(i) - theta(j);
                    jac(n_ang + r, n_ang + c) = u(i) * (g(i, j) * std::sin(t) - b(i, j) * std::cos(t));
                }
            }
        }

        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const Eigen::VectorXd dx = lu.solve(mismatch);
        if (!dx.allFinite()) throw NumericalError("power flow: Jacobian solve produced non-finite step");
        for (int r = 0; r < n_ang; ++r) theta(ang_idx[r]) += dx(r);
        for (int r = 0; r < n_mag; ++r) u(mag_idx[r]) += dx(n_ang + r);
    }

    std::ostringstream os;
    os << "power flow: no convergence after " << max_iterations
       << " iterations, final max mismatch " << max_mismatch;
    throw NumericalError(os.str());
}

} // namespace bicsim
