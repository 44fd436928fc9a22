#pragma once

#include <Eigen/Dense>

namespace diffopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Sample matrices hold one point per row; row-major storage keeps each point
// contiguous for the kernel layer.
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace diffopt
