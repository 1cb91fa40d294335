#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace pls {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = std::size_t;

}  // namespace pls
