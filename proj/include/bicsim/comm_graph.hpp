#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bicsim {

/// Connected, undirected, unweighted communication graph between the
/// generator controllers. Validated once at construction.
class CommGraph {
public:
    CommGraph() = default;
    explicit CommGraph(Eigen::MatrixXi adjacency);

    static CommGraph ring(int n);

    int size() const { return static_cast<int>(adjacency_.rows()); }
    const Eigen::MatrixXi& adjacency() const { return adjacency_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
    bool is_neighbor(int i, int j) const;

    /// Base Laplacian [A 1_n] - A.
    Eigen::MatrixXd base_laplacian() const;

private:
    Eigen::MatrixXi adjacency_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> neighbors_;
};

} // namespace bicsim
