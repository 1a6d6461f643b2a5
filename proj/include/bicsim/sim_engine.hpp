#pragma once

#include <vector>

#include "bicsim/equilibrium.hpp"
#include "bicsim/scenario.hpp"

namespace bicsim {

/// One sampled point of a run.
struct TrajectoryRecord {
    double time = 0.0;
    Eigen::VectorXd omega, delta, e_q_prime; // per generator
    Eigen::VectorXd p, q, t_m, e_f;          // per generator
    Eigen::VectorXd sigma_t, sigma_e;        // per generator
    Eigen::VectorXd bus_v_mag;               // per bus
};

/// Assembles the closed-loop ODE, integrates it with fixed-step RK4, applies
/// the scenario's timed events and records trajectories.
///
/// The global state stacks [delta | omega | Eq' | sigma_T | sigma_E], each
/// block of length n. Controller derivatives are zero until the activation
/// event fires. A run is strictly sequential and deterministic.
class SimEngine {
public:
    explicit SimEngine(Scenario scenario);

    /// Integrates the whole scenario and returns the recorded samples.
    std::vector<TrajectoryRecord> run();

    /// Closed-loop right-hand side for the engine's current network and
    /// activation status.
    Eigen::VectorXd global_derivative(double t, const Eigen::VectorXd& x) const;

    const Scenario& scenario() const { return scenario_; }
    const EquilibriumPoint& equilibrium() const { return equilibrium_; }
    const AdmittanceMatrix& dynamic_admittance() const { return y_dyn_; }
    bool controller_active() const { return controller_active_; }

    /// Initial stacked state at the equilibrium with sigma = 0.
    Eigen::VectorXd initial_state() const;

    /// Applies the sigma clamp policy in place: overshoot up to `tol` is
    /// clamped to the closed interval, anything larger is a bound violation.
    void clamp_sigma(Eigen::VectorXd& x, double t, double tol = 1e-9) const;

    /// For tests: applies one event (pre-event voltages taken at `state`).
    void apply_event(const Event& e, const Eigen::VectorXd& state);

private:
    NetworkSolution solve_at(const Eigen::VectorXd& x) const;
    void rebuild_dynamic_admittance();
    TrajectoryRecord make_record(double t, const Eigen::VectorXd& x) const;

    Scenario scenario_;
    EquilibriumPoint equilibrium_;
    AdmittanceMatrix y_dyn_;
    std::vector<LoadAdmittance> active_added_loads_;
    std::vector<std::string> active_added_ids_;
    bool controller_active_ = false;
    int n_ = 0;
};

} // namespace bicsim
