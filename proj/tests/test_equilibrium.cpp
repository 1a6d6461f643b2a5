#include <doctest.h>

#include <random>

#include "bicsim/equilibrium.hpp"
#include "bicsim/errors.hpp"
#include "bicsim/power_flow.hpp"
#include "test_helpers.hpp"

using namespace bicsim;

TEST_CASE("power flow: flat solution for a dead lossless network") {
    const std::vector<Line> lines{{0, 1, 0.0, 0.2, 0.0}, {1, 2, 0.0, 0.1, 0.0}};
    const AdmittanceMatrix y = build_admittance(3, lines, {}, {});
    std::vector<BusSpec> spec(3);
    spec[0] = {BusKind::Slack, 0.0, 0.0, 1.0};
    const PowerFlowResult pf = solve_power_flow(y, spec);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(pf.bus_voltages(i) - Complex(1.0, 0.0)) < 1e-12);
}

TEST_CASE("power flow: 2-bus case matches the hand-solved quadratic") {
    // Slack 1 per 0 deg at bus 0, line y = 1/(j 0.5) = -2j, PQ bus with injection
    // S = -(0.5 + 0.2j). Hand algebra gives Im V1 = -0.25 and
    // Re V1 = (1 + sqrt(0.35))/2 on the high-voltage branch.
    const Line line{0, 1, 0.0, 0.5, 0.0};
    const AdmittanceMatrix y = build_admittance(2, std::span(&line, 1), {}, {});
    std::vector<BusSpec> spec(2);
    spec[0] = {BusKind::Slack, 0.0, 0.0, 1.0};
    spec[1] = {BusKind::PQ, -0.5, -0.2, 1.0};
    const PowerFlowResult pf = solve_power_flow(y, spec);
    CHECK(pf.bus_voltages(1).real() == doctest::Approx(0.7958039891549809).epsilon(1e-12));
    CHECK(pf.bus_voltages(1).imag() == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(pf.max_mismatch < 1e-10);
}

TEST_CASE("power flow: injections balance loads and losses") {
    // 4-bus meshed case with loads as admittances and one PV generator.
    const std::vector<Line> lines{{0, 2, 0.01, 0.1, 0.0},
                                  {1, 3, 0.02, 0.08, 0.01},
                                  {2, 3, 0.01, 0.12, 0.0},
                                  {0, 3, 0.03, 0.2, 0.0}};
    const std::vector<LoadAdmittance> loads{{2, Complex(1.2, -0.25)}, {3, Complex(0.7, -0.1)}};
    const AdmittanceMatrix y = build_admittance(4, lines, loads, {});
    std::vector<BusSpec> spec(4);
    spec[0] = {BusKind::Slack, 0.0, 0.0, 1.02};
    spec[1] = {BusKind::PV, 0.9, 0.0, 1.01};
    const PowerFlowResult pf = solve_power_flow(y, spec);

    // sum of injections equals element-wise consumption of every admittance
    Complex total_injection = 0.0;
    for (int i = 0; i < 4; ++i) total_injection += bus_injection(y, pf.bus_voltages, i);
    Complex consumed = 0.0; // each admittance element absorbs conj(y) |V_across|^2
    for (const Line& l : lines) {
        const Complex series = 1.0 / Complex(l.resistance, l.reactance);
        const Complex dv = pf.bus_voltages(l.from) - pf.bus_voltages(l.to);
        consumed += std::conj(series) * std::norm(dv);
        consumed += std::conj(Complex(0.0, l.shunt_susceptance / 2.0)) *
                    (std::norm(pf.bus_voltages(l.from)) + std::norm(pf.bus_voltages(l.to)));
    }
    for (const LoadAdmittance& l : loads)
        consumed += std::conj(l.admittance) * std::norm(pf.bus_voltages(l.bus));
    CHECK(std::abs(total_injection - consumed) < 1e-8);

    // PV bus got its setpoints
    CHECK(std::abs(pf.bus_voltages(1)) == doctest::Approx(1.01).epsilon(1e-12));
    CHECK(bus_injection(y, pf.bus_voltages, 1).real() == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("power flow: rejects bad specs and reports non-convergence") {
    const Line line{0, 1, 0.0, 0.5, 0.0};
    const AdmittanceMatrix y = build_admittance(2, std::span(&line, 1), {}, {});
    std::vector<BusSpec> spec(2); // no slack
    CHECK_THROWS_AS((void)solve_power_flow(y, spec), ValidationError);

    spec[0] = {BusKind::Slack, 0.0, 0.0, 1.0};
    spec[1] = {BusKind::PQ, -50.0, 0.0, 1.0}; // far beyond the line's transfer capability
    bool threw = false;
    try {
        (void)solve_power_flow(y, spec);
    } catch (const NumericalError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("mismatch") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("back_solve_generator: no-load machine") {
    GeneratorParams p;
    const BackSolveResult r = back_solve_generator(Complex(1.0, 0.0), 0.0, 0.0, p);
    CHECK(std::abs(r.interface.i_d) < 1e-14);
    CHECK(std::abs(r.interface.i_q) < 1e-14);
    CHECK(r.t_m_nominal == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.state.e_q_prime == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.state.delta == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.e_f_nominal == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("back_solve_generator: grid-search oracle agreement") {
    // Coarse-to-fine grid over (delta, Eq') minimizing the terminal power
    // residual; independent of the production construction.
    GeneratorParams p;
    const Complex v_t(1.0, 0.0);
    const double p_target = 0.8, q_target = 0.2;

    auto residual = [&](double delta, double eq) {
        const Complex u = v_t * std::polar(1.0, -delta);
        const auto [i_d, i_q] = testing::stator_oracle(eq, u.imag(), u.real(), p);
        const double pw = u.imag() * i_d + u.real() * i_q;
        const double qw = u.imag() * i_q - u.real() * i_d;
        return std::hypot(pw - p_target, qw - q_target);
    };
    double best_d = 0.0, best_e = 1.0;
    double lo_d = -M_PI / 2, hi_d = M_PI / 2, lo_e = 0.1, hi_e = 2.5;
    for (int level = 0; level < 8; ++level) {
        double best = 1e30;
        const int steps = 40;
        for (int a = 0; a <= steps; ++a)
            for (int b = 0; b <= steps; ++b) {
                const double d = lo_d + (hi_d - lo_d) * a / steps;
                const double e = lo_e + (hi_e - lo_e) * b / steps;
                const double r = residual(d, e);
                if (r < best) {
                    best = r;
                    best_d = d;
                    best_e = e;
                }
            }
        const double span_d = (hi_d - lo_d) / steps, span_e = (hi_e - lo_e) / steps;
        lo_d = best_d - 2 * span_d;
        hi_d = best_d + 2 * span_d;
        lo_e = best_e - 2 * span_e;
        hi_e = best_e + 2 * span_e;
    }

    const BackSolveResult r = back_solve_generator(v_t, p_target, q_target, p);
    CHECK(r.state.delta == doctest::Approx(best_d).epsilon(1e-6));
    CHECK(r.state.e_q_prime == doctest::Approx(best_e).epsilon(1e-6));
    // frozen values from the oracle run
    CHECK(r.state.delta == doctest::Approx(0.3763908544558947).epsilon(1e-12));
    CHECK(r.state.e_q_prime == doctest::Approx(1.0756892691010853).epsilon(1e-12));
    CHECK(r.e_f_nominal == doctest::Approx(1.7957681062655828).epsilon(1e-12));
    CHECK(r.t_m_nominal == doctest::Approx(0.8017).epsilon(1e-10));
}

TEST_CASE("back_solve_generator: round trip through the machine algebra") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GeneratorParams p;
    for (int trial = 0; trial < 200; ++trial) {
        const Complex v_t = std::polar(0.9 + 0.2 * std::abs(u(rng)), 0.5 * u(rng));
        const double pw = 0.9 * std::abs(u(rng)), qw = 0.5 * u(rng);
        const BackSolveResult r = back_solve_generator(v_t, pw, qw, p);
        // stator equations as written
        const ElectricalInterface& e = r.interface;
        CHECK(std::abs(p.r_a * e.i_q - (p.x_d_prime * e.i_d + r.state.e_q_prime - e.v_q)) < 1e-12);
        CHECK(std::abs(p.r_a * e.i_d - (-p.x_q_prime * e.i_q - e.v_d)) < 1e-12);
        // all derivatives vanish
        const auto d = generator_derivatives(r.state, r.t_m_nominal, r.e_f_nominal, e.i_d, e.t_e, p);
        CHECK(std::abs(d.d_delta) < 1e-12);
        CHECK(std::abs(d.d_omega) < 1e-12);
        CHECK(std::abs(d.d_e_q_prime) < 1e-12);
        // terminal power reproduced
        CHECK(e.p == doctest::Approx(pw).epsilon(1e-11));
        CHECK(e.q == doctest::Approx(qw).epsilon(1e-11));
    }
}

TEST_CASE("back_solve_generator: error paths") {
    GeneratorParams p;
    CHECK_THROWS_AS((void)back_solve_generator(Complex(0.0, 0.0), 0.1, 0.0, p), ValidationError);
    // deep underexcitation near the stator impedance's short-circuit point
    // drives the internal emf negative
    CHECK_THROWS_AS((void)back_solve_generator(Complex(1.0, 0.0), 0.0, -1.9, p), NumericalError);
}

TEST_CASE("compute_equilibrium: network solve reproduces the load-flow point") {
    std::vector<GeneratorParams> params(2);
    params[0].x_q_prime = 0.3; // round up both machines a bit differently
    const std::vector<Line> lines{{0, 2, 0.005, 0.05, 0.0},
                                  {1, 3, 0.005, 0.06, 0.0},
                                  {2, 3, 0.01, 0.1, 0.0}};
    const std::vector<LoadAdmittance> loads{{2, Complex(0.8, -0.15)}, {3, Complex(0.9, -0.2)}};
    const AdmittanceMatrix y_network = build_admittance(4, lines, loads, {});
    const std::vector<int> gen_bus{0, 1};
    const std::vector<double> dispatch{0.0, 0.9};
    const std::vector<double> v_set{1.02, 1.01};

    const EquilibriumPoint eq =
        compute_equilibrium(y_network, params, gen_bus, dispatch, v_set, 0);

    // dynamic-side solve at the equilibrium states must give the same voltages
    std::vector<std::pair<int, Complex>> shunts;
    for (int g = 0; g < 2; ++g)
        shunts.emplace_back(gen_bus[g], Complex(1.0 / params[g].r_a, 0.0));
    const AdmittanceMatrix y_dyn = build_admittance(4, lines, loads, shunts);
    std::vector<GenPoint> pts(2);
    for (int g = 0; g < 2; ++g) pts[g] = {eq.gen_states[g].delta, eq.gen_states[g].e_q_prime};
    const NetworkSolution sol = solve_network(y_dyn, pts, params, gen_bus);
    CHECK((sol.bus_voltages - eq.bus_voltages).lpNorm<Eigen::Infinity>() < 1e-9);

    // and the closed-loop derivatives vanish there
    for (int g = 0; g < 2; ++g) {
        const auto d = generator_derivatives(eq.gen_states[g], eq.t_m_nominal(g),
                                             eq.e_f_nominal(g), sol.per_generator[g].i_d,
                                             sol.per_generator[g].t_e, params[g]);
        CHECK(std::abs(d.d_delta) < 1e-9);
        CHECK(std::abs(d.d_omega) < 1e-9);
        CHECK(std::abs(d.d_e_q_prime) < 1e-9);
    }
}
