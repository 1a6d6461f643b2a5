#include "bicsim/controller.hpp"

#include <sstream>

#include "bicsim/errors.hpp"

namespace bicsim {

namespace {

void require_positive(const Eigen::VectorXd& v, const char* name) {
    for (int i = 0; i < v.size(); ++i)
        if (!(v(i) > 0.0)) {
            std::ostringstream os;
            os << "controller: " << name << "[" << i << "] must be > 0 (got " << v(i) << ")";
            throw ValidationError(os.str());
        }
}

} // namespace

void ControllerParams::validate() const {
    if (!(k_t > 0.0)) throw ValidationError("controller: kT must be > 0");
    if (!(k_p > 0.0)) throw ValidationError("controller: kP must be > 0");
    if (!(k_e > 0.0)) throw ValidationError("controller: kE must be > 0");
    if (!(k_leak > 0.0)) throw ValidationError("controller: leakage gain k must be > 0");
    const auto n = n_gains.size();
    if (m_gains.size() != n || dt_max.size() != n || dt_min.size() != n || de_max.size() != n ||
        de_min.size() != n)
        throw ValidationError("controller: gain/limit vectors must all have length n");
    require_positive(n_gains, "n");
    require_positive(m_gains, "m");
    require_positive(dt_max, "dTmax");
    require_positive(dt_min, "dTmin");
    require_positive(de_max, "dEmax");
    require_positive(de_min, "dEmin");
}

double g_value(double sigma, double d_max, double d_min) {
    return (1.0 - sigma / d_max) * (1.0 + sigma / d_min);
}

Eigen::MatrixXd weighted_laplacian(const Eigen::MatrixXi& adjacency, const Eigen::VectorXd& g) {
    const int n = static_cast<int>(adjacency.rows());
    if (adjacency.cols() != n || g.size() != n)
        throw ValidationError("weighted_laplacian: dimension mismatch");
    const Eigen::MatrixXd a = adjacency.cast<double>();
    // [g][Ag] - [g]A[g]
    Eigen::MatrixXd l = -(g.asDiagonal() * a * g.asDiagonal());
    l.diagonal() += g.cwiseProduct(a * g);
    return l;
}

namespace {

/// Validates that `msgs` is exactly one message per neighbor of i, in any order.
void check_message_set(int i, std::span<const NeighborMessage> msgs, const CommGraph& graph) {
    const auto& nbrs = graph.neighbors(i);
    if (msgs.size() != nbrs.size()) {
        std::ostringstream os;
        os << "controller " << i << ": expected " << nbrs.size() << " neighbor messages, got "
           << msgs.size();
        throw ProtocolViolationError(os.str());
    }
    std::vector<bool> seen(graph.size(), false);
    for (const NeighborMessage& m : msgs) {
        if (!graph.is_neighbor(i, m.sender)) {
            std::ostringstream os;
            os << "controller " << i << ": message from non-neighbor " << m.sender;
            throw ProtocolViolationError(os.str());
        }
        if (seen[m.sender]) {
            std::ostringstream os;
            os << "controller " << i << ": duplicate message from " << m.sender;
            throw ProtocolViolationError(os.str());
        }
        seen[m.sender] = true;
    }
}

} // namespace

double sigma_t_derivative(int i, double sigma_t_i, double omega_i, double own_weighted_p,
                          double own_g_t, std::span<const NeighborMessage> neighbor_msgs,
                          const CommGraph& graph, const ControllerParams& params) {
    check_message_set(i, neighbor_msgs, graph);
    double consensus = 0.0;
    for (const NeighborMessage& m : neighbor_msgs)
        consensus += (own_weighted_p - m.weighted_p) * m.g_t;
    return params.k_t * own_g_t * (params.omega_s - omega_i - params.k_p * consensus) -
           params.k_leak * sigma_t_i;
}

double sigma_e_derivative(int i, double sigma_e_i, double own_weighted_q, double own_g_e,
                          std::span<const NeighborMessage> neighbor_msgs,
                          const CommGraph& graph, const ControllerParams& params) {
    check_message_set(i, neighbor_msgs, graph);
    double consensus = 0.0;
    for (const NeighborMessage& m : neighbor_msgs)
        consensus += (own_weighted_q - m.weighted_q) * m.g_e;
    return -params.k_e * own_g_e * consensus - params.k_leak * sigma_e_i;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> control_outputs(const ControllerParams& params,
                                                            const ControllerState& state) {
    return {params.t_m_nominal + state.sigma_t, params.e_f_nominal + state.sigma_e};
}

std::vector<std::vector<NeighborMessage>> exchange_messages(
    const CommGraph& graph, std::span<const ControllerLocalData> local) {
    const int n = graph.size();
    if (static_cast<int>(local.size()) != n)
        throw ValidationError("exchange_messages: local data required for all generators");
    std::vector<std::vector<NeighborMessage>> inbox(n);
    for (int i = 0; i < n; ++i) {
        const auto& nbrs = graph.neighbors(i);
        inbox[i].reserve(nbrs.size());
        for (int j : nbrs)
            inbox[i].push_back(
                {j, local[j].weighted_p, local[j].weighted_q, local[j].g_t, local[j].g_e});
    }
    return inbox;
}

Eigen::VectorXd g_t_vector(const ControllerParams& params, const Eigen::VectorXd& sigma_t) {
    Eigen::VectorXd g(sigma_t.size());
    for (int i = 0; i < sigma_t.size(); ++i)
        g(i) = g_value(sigma_t(i), params.dt_max(i), params.dt_min(i));
    return g;
}

Eigen::VectorXd g_e_vector(const ControllerParams& params, const Eigen::VectorXd& sigma_e) {
    Eigen::VectorXd g(sigma_e.size());
    for (int i = 0; i < sigma_e.size(); ++i)
        g(i) = g_value(sigma_e(i), params.de_max(i), params.de_min(i));
    return g;
}

void sigma_derivatives_stacked(const ControllerParams& params, const CommGraph& graph,
                               const Eigen::VectorXd& sigma_t, const Eigen::VectorXd& sigma_e,
                               const Eigen::VectorXd& omega, const Eigen::VectorXd& p,
                               const Eigen::VectorXd& q, Eigen::VectorXd& d_sigma_t,
                               Eigen::VectorXd& d_sigma_e) {
    const Eigen::VectorXd g_t = g_t_vector(params, sigma_t);
    const Eigen::VectorXd g_e = g_e_vector(params, sigma_e);
    const Eigen::MatrixXd l_t = weighted_laplacian(graph.adjacency(), g_t);
    const Eigen::MatrixXd l_e = weighted_laplacian(graph.adjacency(), g_e);
    const Eigen::VectorXd slip = Eigen::VectorXd::Constant(omega.size(), params.omega_s) - omega;
    d_sigma_t = params.k_t * (g_t.cwiseProduct(slip) -
                              params.k_p * (l_t * params.n_gains.cwiseProduct(p))) -
                params.k_leak * sigma_t;
    d_sigma_e = -params.k_e * (l_e * params.m_gains.cwiseProduct(q)) - params.k_leak * sigma_e;
}

} // namespace bicsim
