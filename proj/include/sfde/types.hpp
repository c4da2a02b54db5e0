#pragma once

#include <Eigen/Dense>

namespace sfde {

using Real = double;
using Index = Eigen::Index;

using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace sfde
