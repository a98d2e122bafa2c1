#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace swarmplan {

/// Row-major dense matrix of doubles.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sparse graph shift operator S; row i holds the in-neighbors of node i.
using Adjacency = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace swarmplan
