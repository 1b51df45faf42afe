#pragma once

#include <Eigen/Dense>

namespace ccm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Read-only views accepting both plain matrices and Eigen expressions/blocks.
using MatRef = const Eigen::Ref<const Matrix>&;
using VecRef = const Eigen::Ref<const Vector>&;

}  // namespace ccm
