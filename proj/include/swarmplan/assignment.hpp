#pragma once

#include "swarmplan/world.hpp"

#include <vector>

namespace swarmplan {

/// Square, finite, nonnegative cost matrix stored row-major.
class CostMatrix {
public:
    CostMatrix() = default;
    explicit CostMatrix(int n, double fill = 0.0);
    CostMatrix(int rows, int cols, std::vector<double> entries);
    CostMatrix(std::initializer_list<std::initializer_list<double>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int size() const { return rows_; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    /// Throws std::invalid_argument unless square, finite and nonnegative.
    void validate() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

struct Assignment {
    std::vector<int> goal_of;
    double total_cost = 0.0;
};

/// Sum of cost(i, goal_of[i]) accumulated in agent order.
double assignment_cost(const CostMatrix& cost, const std::vector<int>& goal_of);

/// O(n^3) shortest-augmenting-path Hungarian solver. Among optimal
/// permutations the lexicographically smallest goal_of is returned.
Assignment hungarian(const CostMatrix& cost);

inline constexpr int kBruteForceMaxSize = 8;

/// Exhaustive search over all n! permutations (n <= 8); same tie-break as hungarian.
Assignment brute_force_assignment(const CostMatrix& cost);

CostMatrix distance_costs(const Positions& agents, const Positions& goals);
CostMatrix squared_distance_costs(const Positions& agents, const Positions& goals);

/// Minimizes the sum of Euclidean distances.
Assignment lsap_assignment(const Positions& agents, const Positions& goals);
/// Minimizes the sum of squared distances.
Assignment capt_assignment(const Positions& agents, const Positions& goals);

}  // namespace swarmplan
