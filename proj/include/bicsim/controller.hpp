#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bicsim/comm_graph.hpp"

namespace bicsim {

/// Gains, nominal inputs and input-offset limits of the distributed
/// bounded-integral controller. Vectors are indexed by generator.
struct ControllerParams {
    double k_t = 0.0;   ///< frequency-restoration gain
    double k_p = 0.0;   ///< real-power consensus gain
    double k_e = 0.0;   ///< reactive-power consensus gain
    double k_leak = 0.0; ///< arbitrarily small leakage gain k
    double omega_s = 1.0;

    Eigen::VectorXd n_gains; ///< real-power sharing weights n_i
    Eigen::VectorXd m_gains; ///< reactive-power sharing weights m_i
    Eigen::VectorXd t_m_nominal;
    Eigen::VectorXd e_f_nominal;
    Eigen::VectorXd dt_max, dt_min; ///< torque offset limits, both > 0
    Eigen::VectorXd de_max, de_min; ///< field-voltage offset limits, both > 0

    int size() const { return static_cast<int>(n_gains.size()); }
    void validate() const;
};

/// The bounded integral states, one pair per generator.
struct ControllerState {
    Eigen::VectorXd sigma_t;
    Eigen::VectorXd sigma_e;
};

/// What one controller broadcasts to its graph neighbors each evaluation.
struct NeighborMessage {
    int sender = -1;
    double weighted_p = 0.0; ///< n_j P_j
    double weighted_q = 0.0; ///< m_j Q_j
    double g_t = 0.0;
    double g_e = 0.0;
};

/// Local measurements a controller publishes; input to exchange_messages.
struct ControllerLocalData {
    double weighted_p = 0.0;
    double weighted_q = 0.0;
    double g_t = 0.0;
    double g_e = 0.0;
};

/// Boundary polynomial (1 - sigma/d_max)(1 + sigma/d_min): zero exactly at the
/// interval ends, positive strictly inside.
double g_value(double sigma, double d_max, double d_min);

/// State-dependent weighted Laplacian [g][Ag] - [g]A[g].
Eigen::MatrixXd weighted_laplacian(const Eigen::MatrixXi& adjacency, const Eigen::VectorXd& g);

/// Torque-side integral state dynamics of controller i:
///   k_T g_Ti (omega_s - omega_i - k_P sum_j (n_i P_i - n_j P_j) g_Tj) - k sigma_Ti
/// summed over the graph neighbors j of i. Messages from non-neighbors are a
/// protocol violation.
double sigma_t_derivative(int i, double sigma_t_i, double omega_i, double own_weighted_p,
                          double own_g_t, std::span<const NeighborMessage> neighbor_msgs,
                          const CommGraph& graph, const ControllerParams& params);

/// Field-voltage-side dynamics of controller i:
///   -k_E g_Ei sum_j (m_i Q_i - m_j Q_j) g_Ej - k sigma_Ei.
double sigma_e_derivative(int i, double sigma_e_i, double own_weighted_q, double own_g_e,
                          std::span<const NeighborMessage> neighbor_msgs,
                          const CommGraph& graph, const ControllerParams& params);

/// Generator inputs: T_m = T_m^n + sigma_T, E_f = E_f^n + sigma_E.
std::pair<Eigen::VectorXd, Eigen::VectorXd> control_outputs(const ControllerParams& params,
                                                            const ControllerState& state);

/// Delivers to each controller exactly the messages of its graph neighbors.
std::vector<std::vector<NeighborMessage>> exchange_messages(
    const CommGraph& graph, std::span<const ControllerLocalData> local);

/// Stacked vector form of the sigma dynamics,
///   dsigma_T = k_T ([g_T](omega_s 1 - omega) - k_P L_T n P) - k sigma_T
///   dsigma_E = -k_E L_E m Q - k sigma_E,
/// equivalent to stacking the per-generator derivatives.
void sigma_derivatives_stacked(const ControllerParams& params, const CommGraph& graph,
                               const Eigen::VectorXd& sigma_t, const Eigen::VectorXd& sigma_e,
                               const Eigen::VectorXd& omega, const Eigen::VectorXd& p,
                               const Eigen::VectorXd& q, Eigen::VectorXd& d_sigma_t,
                               Eigen::VectorXd& d_sigma_e);

/// g vectors for a full controller state.
Eigen::VectorXd g_t_vector(const ControllerParams& params, const Eigen::VectorXd& sigma_t);
Eigen::VectorXd g_e_vector(const ControllerParams& params, const Eigen::VectorXd& sigma_e);

} // namespace bicsim
