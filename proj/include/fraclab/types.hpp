#pragma once

#include <Eigen/Dense>

namespace fraclab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Cell-centre coordinates, one row per node; d columns.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace fraclab
