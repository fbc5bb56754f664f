#pragma once

#include <Eigen/Core>

namespace nmp {

template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecX<double>;
using Mat = MatX<double>;
using Vec2 = Eigen::Vector2d;

// Joint angles of the arm, one entry per degree of freedom.
using Configuration = Vec;

}  // namespace nmp
