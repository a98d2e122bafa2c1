#include "swarmplan/assignment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace swarmplan {
namespace {

struct Solution {
    std::vector<int> goal_of;
    std::vector<double> row_potential;
    std::vector<double> col_potential;
};

// Shortest augmenting path Hungarian method with row/column potentials.
// Rows are inserted one at a time; ties in the Dijkstra-like scan resolve
// to the lowest column index.
Solution solve_core(const CostMatrix& c) {
    const int n = c.rows();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    Solution s;
    s.goal_of.assign(n, -1);
    for (int j = 1; j <= n; ++j) {
        s.goal_of[match[j] - 1] = j - 1;
    }
    s.row_potential.assign(u.begin() + 1, u.end());
    s.col_potential.assign(v.begin() + 1, v.end());
    return s;
}

// Optimal completion of rows [first_row, n) over the columns not in `taken`.
std::vector<int> complete_assignment(const CostMatrix& c, const std::vector<int>& prefix,
                                     int first_row) {
    const int n = c.rows();
    std::vector<char> taken(n, 0);
    for (int i = 0; i < first_row; ++i) taken[prefix[i]] = 1;
    std::vector<int> free_cols;
    for (int j = 0; j < n; ++j) {
        if (!taken[j]) free_cols.push_back(j);
    }
    const int m = n - first_row;
    CostMatrix sub(m);
    for (int r = 0; r < m; ++r) {
        for (int q = 0; q < m; ++q) {
            sub(r, q) = c(first_row + r, free_cols[q]);
        }
    }
    const Solution s = solve_core(sub);
    std::vector<int> out(prefix.begin(), prefix.begin() + first_row);
    for (int r = 0; r < m; ++r) out.push_back(free_cols[s.goal_of[r]]);
    return out;
}

}  // namespace

CostMatrix::CostMatrix(int n, double fill)
    : rows_(n), cols_(n), data_(static_cast<std::size_t>(n) * n, fill) {}

CostMatrix::CostMatrix(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("CostMatrix: entry count does not match shape");
    }
}

CostMatrix::CostMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = static_cast<int>(rows.size());
    cols_ = rows_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != cols_) {
            throw std::invalid_argument("CostMatrix: ragged rows");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

void CostMatrix::validate() const {
    if (rows_ != cols_) {
        throw std::invalid_argument("cost matrix must be square, got " + std::to_string(rows_) +
                                    "x" + std::to_string(cols_));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) throw std::invalid_argument("cost matrix has a non-finite entry");
        if (x < 0.0) throw std::invalid_argument("cost matrix has a negative entry");
    }
}

double assignment_cost(const CostMatrix& cost, const std::vector<int>& goal_of) {
    double total = 0.0;
    for (std::size_t i = 0; i < goal_of.size(); ++i) {
        total += cost(static_cast<int>(i), goal_of[i]);
    }
    return total;
}

Assignment hungarian(const CostMatrix& cost) {
    cost.validate();
    const int n = cost.rows();
    if (n == 0) return {};

    const Solution base = solve_core(cost);
    std::vector<int> best = base.goal_of;
    double best_cost = assignment_cost(cost, best);

    // Any optimal permutation only uses edges that are tight under the optimal
    // potentials, so only those are candidates for a lexicographically smaller
    // optimum. The tolerance filters candidates; acceptance compares costs exactly.
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, cost(i, j));
    const double tol = 1e-9 * std::max(scale, 1.0);

    std::vector<char> fixed_col(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < best[i]; ++j) {
            if (fixed_col[j]) continue;
            const double reduced = cost(i, j) - base.row_potential[i] - base.col_potential[j];
            if (reduced > tol) continue;
            std::vector<int> prefix = best;
            prefix[i] = j;
            std::vector<int> candidate = complete_assignment(cost, prefix, i + 1);
            const double c = assignment_cost(cost, candidate);
            if (c <= best_cost) {
                best = std::move(candidate);
                best_cost = c;
                break;
            }
        }
        fixed_col[best[i]] = 1;
    }
    return {std::move(best), best_cost};
}

Assignment brute_force_assignment(const CostMatrix& cost) {
    cost.validate();
    const int n = cost.rows();
    if (n > kBruteForceMaxSize) {
        throw std::invalid_argument("brute_force_assignment supports n <= 8, got " +
                                    std::to_string(n));
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Assignment best{perm, assignment_cost(cost, perm)};
    while (std::next_permutation(perm.begin(), perm.end())) {
        const double c = assignment_cost(cost, perm);
        if (c < best.total_cost) {
            best.goal_of = perm;
            best.total_cost = c;
        }
    }
    return best;
}

CostMatrix distance_costs(const Positions& agents, const Positions& goals) {
    if (agents.size() != goals.size()) {
        throw std::invalid_argument("agent and goal counts differ");
    }
    const int n = static_cast<int>(agents.size());
    CostMatrix c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = distance(agents[i], goals[j]);
    return c;
}

CostMatrix squared_distance_costs(const Positions& agents, const Positions& goals) {
    if (agents.size() != goals.size()) {
        throw std::invalid_argument("agent and goal counts differ");
    }
    const int n = static_cast<int>(agents.size());
    CostMatrix c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = squared_distance(agents[i], goals[j]);
    return c;
}

Assignment lsap_assignment(const Positions& agents, const Positions& goals) {
    return hungarian(distance_costs(agents, goals));
}

Assignment capt_assignment(const Positions& agents, const Positions& goals) {
    return hungarian(squared_distance_costs(agents, goals));
}

}  // namespace swarmplan
