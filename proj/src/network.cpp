#include "bicsim/network.hpp"

#include <cmath>
#include <sstream>

#include "bicsim/errors.hpp"

namespace bicsim {

namespace {

void check_bus(int bus, int n_buses, const char* what) {
    if (bus < 0 || bus >= n_buses) {
        std::ostringstream os;
        os << what << ": bus index " << bus << " out of range [0, " << n_buses << ")";
        throw ValidationError(os.str());
    }
}

} // namespace

AdmittanceMatrix build_admittance(int n_buses, std::span<const Line> lines,
                                  std::span<const LoadAdmittance> loads,
                                  std::span<const std::pair<int, Complex>> generator_shunts) {
    if (n_buses <= 0) throw ValidationError("build_admittance: bus count must be positive");
    AdmittanceMatrix y;
    y.m = Eigen::MatrixXcd::Zero(n_buses, n_buses);
    for (const Line& line : lines) {
        check_bus(line.from, n_buses, "line");
        check_bus(line.to, n_buses, "line");
        if (line.from == line.to)
            throw ValidationError("line: endpoints must differ");
        if (line.resistance == 0.0 && line.reactance == 0.0)
            throw ValidationError("line: zero series impedance");
        const Complex series = 1.0 / Complex(line.resistance, line.reactance);
        const Complex half_charging(0.0, line.shunt_susceptance / 2.0);
        y.m(line.from, line.from) += series + half_charging;
        y.m(line.to, line.to) += series + half_charging;
        y.m(line.from, line.to) -= series;
        y.m(line.to, line.from) -= series;
    }
    for (const LoadAdmittance& load : loads) {
        check_bus(load.bus, n_buses, "load");
        if (load.admittance.real() < 0.0)
            throw ValidationError("load: conductance must be non-negative (passive load)");
        y.m(load.bus, load.bus) += load.admittance;
    }
    for (const auto& [bus, shunt] : generator_shunts) {
        check_bus(bus, n_buses, "generator shunt");
        y.m(bus, bus) += shunt;
    }
    return y;
}

std::pair<double, double> stator_currents(double e_q_prime, double v_d, double v_q,
                                          const GeneratorParams& p) {
    const double det = p.r_a * p.r_a + p.x_d_prime * p.x_q_prime;
    if (det == 0.0)
        throw NumericalError("stator_currents: degenerate machine (ra^2 + Xd'Xq' = 0)");
    const double i_d = -(p.x_q_prime * (e_q_prime - v_q) + p.r_a * v_d) / det;
    const double i_q = (p.r_a * (e_q_prime - v_q) - p.x_d_prime * v_d) / det;
    return {i_d, i_q};
}

std::pair<double, double> rotate_to_common(double x_q, double x_d, double delta) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    return {x_q * c - x_d * s, x_q * s + x_d * c};
}

Complex injection_current(double i_Q, double i_D, double v_Q, double v_D, double r_a) {
    return Complex(i_Q, i_D) + Complex(v_Q, v_D) / r_a;
}

namespace {

/// The machine injection current as an affine map of its bus voltage:
///   iQ + j iD = kappa + alpha V + beta conj(V).
struct AffineInjection {
    Complex kappa;
    Complex alpha;
    Complex beta;
};

AffineInjection affine_injection(const GenPoint& s, const GeneratorParams& p) {
    const double det = p.r_a * p.r_a + p.x_d_prime * p.x_q_prime;
    if (det == 0.0)
        throw NumericalError("solve_network: degenerate machine (ra^2 + Xd'Xq' = 0)");
    const Complex rot = std::polar(1.0, s.delta);
    AffineInjection a;
    a.kappa = rot * Complex(p.r_a, -p.x_q_prime) * s.e_q_prime / det;
    a.alpha = Complex(-2.0 * p.r_a, p.x_d_prime + p.x_q_prime) / (2.0 * det);
    a.beta = Complex(0.0, p.x_q_prime - p.x_d_prime) / (2.0 * det) * rot * rot;
    return a;
}

} // namespace

NetworkSolution solve_network(const AdmittanceMatrix& y, std::span<const GenPoint> gen_states,
                              std::span<const GeneratorParams> gen_params,
                              std::span<const int> gen_bus) {
    const int n_buses = y.size();
    const int n_gen = static_cast<int>(gen_states.size());
    if (gen_params.size() != gen_states.size() || gen_bus.size() != gen_states.size())
        throw ValidationError("solve_network: generator array sizes disagree");
    for (int g = 0; g < n_gen; ++g) check_bus(gen_bus[g], n_buses, "generator");

    // Real 2N x 2N system in (Re V, Im V). A complex-linear coefficient c on V_j
    // stamps [[Re c, -Im c], [Im c, Re c]]; a coefficient on conj(V_j) stamps
    // [[Re c, Im c], [Im c, -Re c]].
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n_buses, 2 * n_buses);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n_buses);
    for (int i = 0; i < n_buses; ++i) {
        for (int j = 0; j < n_buses; ++j) {
            const Complex c = y.m(i, j);
            if (c == Complex(0.0, 0.0)) continue;
            a(2 * i, 2 * j) += c.real();
            a(2 * i, 2 * j + 1) -= c.imag();
            a(2 * i + 1, 2 * j) += c.imag();
            a(2 * i + 1, 2 * j + 1) += c.real();
        }
    }
    std::vector<AffineInjection> affine(n_gen);
    for (int g = 0; g < n_gen; ++g) {
        affine[g] = affine_injection(gen_states[g], gen_params[g]);
        const int b = gen_bus[g];
        // Move the voltage-dependent part of the injection to the left side.
        const Complex lin = -(affine[g].alpha + 1.0 / gen_params[g].r_a);
        const Complex con = -affine[g].beta;
        a(2 * b, 2 * b) += lin.real();
        a(2 * b, 2 * b + 1) -= lin.imag();
        a(2 * b + 1, 2 * b) += lin.imag();
        a(2 * b + 1, 2 * b + 1) += lin.real();
        a(2 * b, 2 * b) += con.real();
        a(2 * b, 2 * b + 1) += con.imag();
        a(2 * b + 1, 2 * b) += con.imag();
        a(2 * b + 1, 2 * b + 1) -= con.real();
        rhs(2 * b) += affine[g].kappa.real();
        rhs(2 * b + 1) += affine[g].kappa.imag();
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    if (!std::isfinite(rcond) || rcond < 1e-14) {
        std::ostringstream os;
        os << "solve_network: singular augmented system, condition estimate "
           << (rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
        throw NumericalError(os.str());
    }
    const Eigen::VectorXd z = lu.solve(rhs);

    NetworkSolution sol;
    sol.bus_voltages.resize(n_buses);
    for (int i = 0; i < n_buses; ++i) sol.bus_voltages(i) = Complex(z(2 * i), z(2 * i + 1));

    sol.per_generator.resize(n_gen);
    Eigen::VectorXcd injections = Eigen::VectorXcd::Zero(n_buses);
    for (int g = 0; g < n_gen; ++g) {
        const GeneratorParams& p = gen_params[g];
        const Complex v = sol.bus_voltages(gen_bus[g]);
        const Complex u = v * std::polar(1.0, -gen_states[g].delta);
        ElectricalInterface& e = sol.per_generator[g];
        e.v_q = u.real();
        e.v_d = u.imag();
        e.v_Q = v.real();
        e.v_D = v.imag();
        std::tie(e.i_d, e.i_q) = stator_currents(gen_states[g].e_q_prime, e.v_d, e.v_q, p);
        std::tie(e.i_Q, e.i_D) = rotate_to_common(e.i_q, e.i_d, gen_states[g].delta);
        e.psi_d = p.x_d_prime * e.i_d + gen_states[g].e_q_prime;
        e.psi_q = p.x_q_prime * e.i_q;
        e.t_e = electrical_torque(e.psi_d, e.psi_q, e.i_d, e.i_q);
        e.p = e.v_d * e.i_d + e.v_q * e.i_q;
        e.q = e.v_d * e.i_q - e.v_q * e.i_d;
        e.i_g = injection_current(e.i_Q, e.i_D, e.v_Q, e.v_D, p.r_a);
        injections(gen_bus[g]) += e.i_g;
    }

    sol.residual_inf = (y.m * sol.bus_voltages - injections).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(sol.residual_inf) || sol.residual_inf >= 1e-9) {
        std::ostringstream os;
        os << "solve_network: ill-conditioned network, residual " << sol.residual_inf
           << ", condition estimate " << 1.0 / rcond;
        throw NumericalError(os.str());
    }
    return sol;
}

} // namespace bicsim
