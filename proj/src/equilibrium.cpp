#include "bicsim/equilibrium.hpp"

#include <cmath>
#include <sstream>

#include "bicsim/errors.hpp"

namespace bicsim {

BackSolveResult back_solve_generator(Complex terminal_voltage, double p, double q,
                                     const GeneratorParams& params) {
    params.validate();
    if (std::abs(terminal_voltage) <= 0.0)
        throw ValidationError("back_solve: terminal voltage magnitude must be positive");

    // Common-frame current follows from the power convention P + jQ = V conj(I).
    const Complex i_common = Complex(p, -q) / std::conj(terminal_voltage);

    // The stator algebra collapses to
    //   [V + (ra + jXq') I] e^{-j delta} = Eq' + (Xd' - Xq') id,
    // whose right side is real, so the bracket's argument locates delta.
    const Complex locator =
        terminal_voltage + Complex(params.r_a, params.x_q_prime) * i_common;
    if (std::abs(locator) < 1e-12)
        throw NumericalError("back_solve: rotor angle undefined (vanishing internal voltage)");
    const double delta = std::arg(locator);

    const Complex rot = std::polar(1.0, -delta);
    const Complex u = terminal_voltage * rot;
    const Complex i_m = i_common * rot;
    ElectricalInterface e;
    e.v_q = u.real();
    e.v_d = u.imag();
    e.i_q = i_m.real();
    e.i_d = i_m.imag();
    e.v_Q = terminal_voltage.real();
    e.v_D = terminal_voltage.imag();
    e.i_Q = i_common.real();
    e.i_D = i_common.imag();

    const double e_q_prime = e.v_q + params.r_a * e.i_q - params.x_d_prime * e.i_d;
    if (!(e_q_prime > 0.0)) {
        std::ostringstream os;
        os << "back_solve: infeasible dispatch, transient emf " << e_q_prime << " <= 0";
        throw NumericalError(os.str());
    }

    e.psi_d = params.x_d_prime * e.i_d + e_q_prime;
    e.psi_q = params.x_q_prime * e.i_q;
    e.t_e = electrical_torque(e.psi_d, e.psi_q, e.i_d, e.i_q);
    e.p = e.v_d * e.i_d + e.v_q * e.i_q;
    e.q = e.v_d * e.i_q - e.v_q * e.i_d;
    e.i_g = injection_current(e.i_Q, e.i_D, e.v_Q, e.v_D, params.r_a);

    const double residual = std::abs(e.p - p) + std::abs(e.q - q);
    if (!(residual < 1e-10)) {
        std::ostringstream os;
        os << "back_solve: terminal power residual " << residual << " exceeds 1e-10";
        throw NumericalError(os.str());
    }

    BackSolveResult r;
    r.state = {delta, params.omega_s, e_q_prime};
    r.t_m_nominal = e.t_e; // zero slip, so Tm = Te
    r.e_f_nominal = e_q_prime - (params.x_d - params.x_d_prime) * e.i_d;
    r.interface = e;
    return r;
}

EquilibriumPoint compute_equilibrium(const AdmittanceMatrix& y_network,
                                     std::span<const GeneratorParams> gen_params,
                                     std::span<const int> gen_bus,
                                     std::span<const double> dispatch_p,
                                     std::span<const double> v_setpoint, int slack_gen) {
    const int n_gen = static_cast<int>(gen_params.size());
    const int n_buses = y_network.size();
    if (gen_bus.size() != gen_params.size() || dispatch_p.size() != gen_params.size() ||
        v_setpoint.size() != gen_params.size())
        throw ValidationError("compute_equilibrium: generator array sizes disagree");
    if (slack_gen < 0 || slack_gen >= n_gen)
        throw ValidationError("compute_equilibrium: slack generator index out of range");

    std::vector<BusSpec> spec(n_buses); // defaults: PQ with zero injection
    for (int g = 0; g < n_gen; ++g) {
        BusSpec& s = spec[gen_bus[g]];
        if (s.kind != BusKind::PQ || s.p_set != 0.0)
            throw ValidationError("compute_equilibrium: one generator per bus required");
        s.kind = (g == slack_gen) ? BusKind::Slack : BusKind::PV;
        s.p_set = dispatch_p[g];
        s.v_set = v_setpoint[g];
    }

    const PowerFlowResult pf = solve_power_flow(y_network, spec);

    EquilibriumPoint eq;
    eq.bus_voltages = pf.bus_voltages;
    eq.gen_states.resize(n_gen);
    eq.t_m_nominal.resize(n_gen);
    eq.e_f_nominal.resize(n_gen);
    for (int g = 0; g < n_gen; ++g) {
        const Complex s = bus_injection(y_network, pf.bus_voltages, gen_bus[g]);
        const BackSolveResult r = back_solve_generator(pf.bus_voltages(gen_bus[g]), s.real(),
                                                       s.imag(), gen_params[g]);
        eq.gen_states[g] = r.state;
        eq.t_m_nominal(g) = r.t_m_nominal;
        eq.e_f_nominal(g) = r.e_f_nominal;
    }
    return eq;
}

} // namespace bicsim
