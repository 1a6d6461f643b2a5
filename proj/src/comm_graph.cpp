#include "bicsim/comm_graph.hpp"

#include <queue>

#include "bicsim/errors.hpp"

namespace bicsim {

CommGraph::CommGraph(Eigen::MatrixXi adjacency) : adjacency_(std::move(adjacency)) {
    const int n = static_cast<int>(adjacency_.rows());
    if (adjacency_.cols() != n)
        throw ValidationError("comm graph: adjacency matrix must be square");
    if (n < 1) throw ValidationError("comm graph: needs at least one node");
    for (int i = 0; i < n; ++i) {
        if (adjacency_(i, i) != 0)
            throw ValidationError("comm graph: adjacency diagonal must be zero");
        for (int j = 0; j < n; ++j) {
            if (adjacency_(i, j) != 0 && adjacency_(i, j) != 1)
                throw ValidationError("comm graph: adjacency entries must be 0 or 1");
            if (adjacency_(i, j) != adjacency_(j, i))
                throw ValidationError("comm graph: adjacency must be symmetric");
        }
    }
    neighbors_.resize(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adjacency_(i, j) == 1) {
                neighbors_[i].push_back(j);
                if (i < j) edges_.emplace_back(i, j);
            }

    // connectivity (BFS from node 0)
    std::vector<bool> seen(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int reached = 1;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : neighbors_[u])
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
    }
    if (reached != n)
        throw ValidationError("comm graph: graph must be connected");
}

CommGraph CommGraph::ring(int n) {
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, (i + 1) % n) = 1;
        a((i + 1) % n, i) = 1;
    }
    return CommGraph(a);
}

bool CommGraph::is_neighbor(int i, int j) const {
    if (i < 0 || j < 0 || i >= size() || j >= size()) return false;
    return adjacency_(i, j) == 1;
}

Eigen::MatrixXd CommGraph::base_laplacian() const {
    const Eigen::MatrixXd a = adjacency_.cast<double>();
    Eigen::MatrixXd l = -a;
    l.diagonal() += a.rowwise().sum();
    return l;
}

} // namespace bicsim
