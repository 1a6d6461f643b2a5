#include "bicsim/sim_engine.hpp"

#include <cmath>
#include <sstream>

#include "bicsim/controller.hpp"
#include "bicsim/errors.hpp"
#include "bicsim/integrator.hpp"

namespace bicsim {

SimEngine::SimEngine(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    n_ = scenario_.n_generators();

    const AdmittanceMatrix y_network =
        build_admittance(scenario_.n_buses, scenario_.lines, scenario_.loads, {});
    equilibrium_ = compute_equilibrium(y_network, scenario_.generators, scenario_.gen_bus,
                                       scenario_.dispatch_p, scenario_.v_setpoint,
                                       scenario_.slack_gen);
    scenario_.controller.t_m_nominal = equilibrium_.t_m_nominal;
    scenario_.controller.e_f_nominal = equilibrium_.e_f_nominal;

    rebuild_dynamic_admittance();
}

void SimEngine::rebuild_dynamic_admittance() {
    std::vector<LoadAdmittance> loads = scenario_.loads;
    loads.insert(loads.end(), active_added_loads_.begin(), active_added_loads_.end());
    std::vector<std::pair<int, Complex>> shunts;
    shunts.reserve(n_);
    for (int g = 0; g < n_; ++g)
        shunts.emplace_back(scenario_.gen_bus[g], Complex(1.0 / scenario_.generators[g].r_a, 0.0));
    y_dyn_ = build_admittance(scenario_.n_buses, scenario_.lines, loads, shunts);
}

Eigen::VectorXd SimEngine::initial_state() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(5 * n_);
    for (int g = 0; g < n_; ++g) {
        x(g) = equilibrium_.gen_states[g].delta;
        x(n_ + g) = equilibrium_.gen_states[g].omega;
        x(2 * n_ + g) = equilibrium_.gen_states[g].e_q_prime;
    }
    return x;
}

NetworkSolution SimEngine::solve_at(const Eigen::VectorXd& x) const {
    std::vector<GenPoint> pts(n_);
    for (int g = 0; g < n_; ++g) pts[g] = {x(g), x(2 * n_ + g)};
    return solve_network(y_dyn_, pts, scenario_.generators, scenario_.gen_bus);
}

Eigen::VectorXd SimEngine::global_derivative(double t, const Eigen::VectorXd& x) const {
    if (x.size() != 5 * n_)
        throw ValidationError("global_derivative: state size mismatch");
    const NetworkSolution net = solve_at(x);

    const Eigen::VectorXd sigma_t = x.segment(3 * n_, n_);
    const Eigen::VectorXd sigma_e = x.segment(4 * n_, n_);
    const Eigen::VectorXd t_m = scenario_.controller.t_m_nominal + sigma_t;
    const Eigen::VectorXd e_f = scenario_.controller.e_f_nominal + sigma_e;

    Eigen::VectorXd dx(5 * n_);
    for (int g = 0; g < n_; ++g) {
        const GeneratorState s{x(g), x(n_ + g), x(2 * n_ + g)};
        const ElectricalInterface& e = net.per_generator[g];
        const GeneratorDerivatives d =
            generator_derivatives(s, t_m(g), e_f(g), e.i_d, e.t_e, scenario_.generators[g]);
        dx(g) = d.d_delta;
        dx(n_ + g) = d.d_omega;
        dx(2 * n_ + g) = d.d_e_q_prime;
    }

    if (controller_active_) {
        const ControllerParams& c = scenario_.controller;
        std::vector<ControllerLocalData> local(n_);
        for (int g = 0; g < n_; ++g) {
            local[g].weighted_p = c.n_gains(g) * net.per_generator[g].p;
            local[g].weighted_q = c.m_gains(g) * net.per_generator[g].q;
            local[g].g_t = g_value(sigma_t(g), c.dt_max(g), c.dt_min(g));
            local[g].g_e = g_value(sigma_e(g), c.de_max(g), c.de_min(g));
        }
        const auto inbox = exchange_messages(scenario_.graph, local);
        for (int g = 0; g < n_; ++g) {
            dx(3 * n_ + g) = sigma_t_derivative(g, sigma_t(g), x(n_ + g), local[g].weighted_p,
                                                local[g].g_t, inbox[g], scenario_.graph, c);
            dx(4 * n_ + g) = sigma_e_derivative(g, sigma_e(g), local[g].weighted_q, local[g].g_e,
                                                inbox[g], scenario_.graph, c);
        }
    } else {
        dx.segment(3 * n_, 2 * n_).setZero();
    }
    (void)t;
    return dx;
}

void SimEngine::clamp_sigma(Eigen::VectorXd& x, double t, double tol) const {
    const ControllerParams& c = scenario_.controller;
    auto clamp_one = [&](double& v, double lo, double hi, const char* what, int g) {
        if (v > hi) {
            if (v - hi > tol) {
                std::ostringstream os;
                os << "bound violation: " << what << "[" << g << "] = " << v
                   << " exceeds upper bound " << hi << " by " << v - hi << " at t = " << t;
                throw BoundViolationError(os.str());
            }
            v = hi;
        } else if (v < lo) {
            if (lo - v > tol) {
                std::ostringstream os;
                os << "bound violation: " << what << "[" << g << "] = " << v
                   << " exceeds lower bound " << lo << " by " << lo - v << " at t = " << t;
                throw BoundViolationError(os.str());
            }
            v = lo;
        }
    };
    for (int g = 0; g < n_; ++g) {
        clamp_one(x(3 * n_ + g), -c.dt_min(g), c.dt_max(g), "sigma_T", g);
        clamp_one(x(4 * n_ + g), -c.de_min(g), c.de_max(g), "sigma_E", g);
    }
}

void SimEngine::apply_event(const Event& e, const Eigen::VectorXd& state) {
    switch (e.kind) {
    case Event::Kind::ControllerActivate:
        controller_active_ = true;
        break;
    case Event::Kind::LoadAdd: {
        // Power step converted to a constant admittance at the pre-event voltage.
        const NetworkSolution net = solve_at(state);
        const double v_mag = std::abs(net.bus_voltages(e.bus));
        if (!(v_mag > 1e-6)) {
            std::ostringstream os;
            os << "load_add '" << e.id << "': pre-event voltage at bus " << e.bus
               << " is too small to size the admittance";
            throw NumericalError(os.str());
        }
        const double v2 = v_mag * v_mag;
        // y = conj(S)/|V|^2 consumes P + jQ at the pre-event voltage
        active_added_loads_.push_back({e.bus, Complex(e.p / v2, -e.q / v2)});
        active_added_ids_.push_back(e.id);
        rebuild_dynamic_admittance();
        break;
    }
    case Event::Kind::LoadRemove: {
        bool found = false;
        for (std::size_t i = 0; i < active_added_ids_.size(); ++i) {
            if (active_added_ids_[i] == e.ref) {
                active_added_ids_.erase(active_added_ids_.begin() + i);
                active_added_loads_.erase(active_added_loads_.begin() + i);
                found = true;
                break;
            }
        }
        if (!found)
            throw ValidationError("load_remove: no active load with id '" + e.ref + "'");
        rebuild_dynamic_admittance();
        break;
    }
    }
}

TrajectoryRecord SimEngine::make_record(double t, const Eigen::VectorXd& x) const {
    const NetworkSolution net = solve_at(x);
    TrajectoryRecord r;
    r.time = t;
    r.delta = x.segment(0, n_);
    r.omega = x.segment(n_, n_);
    r.e_q_prime = x.segment(2 * n_, n_);
    r.sigma_t = x.segment(3 * n_, n_);
    r.sigma_e = x.segment(4 * n_, n_);
    r.t_m = scenario_.controller.t_m_nominal + r.sigma_t;
    r.e_f = scenario_.controller.e_f_nominal + r.sigma_e;
    r.p.resize(n_);
    r.q.resize(n_);
    for (int g = 0; g < n_; ++g) {
        r.p(g) = net.per_generator[g].p;
        r.q(g) = net.per_generator[g].q;
    }
    r.bus_v_mag = net.bus_voltages.cwiseAbs();
    return r;
}

std::vector<TrajectoryRecord> SimEngine::run() {
    const double dt = scenario_.dt;
    const long n_steps = std::lround(scenario_.t_end / dt);
    std::vector<TrajectoryRecord> records;
    records.reserve(static_cast<std::size_t>(n_steps / scenario_.record_every) + 2);

    Eigen::VectorXd x = initial_state();
    std::size_t next_event = 0;
    auto deriv = [this](double t, const Eigen::VectorXd& state) {
        return global_derivative(t, state);
    };

    for (long step = 0; step <= n_steps; ++step) {
        const double t = step * dt;
        while (next_event < scenario_.events.size() &&
               std::lround(scenario_.events[next_event].time / dt) == step) {
            apply_event(scenario_.events[next_event], x);
            ++next_event;
        }
        if (step % scenario_.record_every == 0 || step == n_steps)
            records.push_back(make_record(t, x));
        if (step == n_steps) break;
        try {
            x = rk4_step(deriv, t, dt, x);
        } catch (const NumericalError& err) {
            std::ostringstream os;
            os << err.what() << " (simulated time " << t << " s)";
            throw NumericalError(os.str());
        }
        clamp_sigma(x, t + dt);
    }
    return records;
}

} // namespace bicsim
