#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>

namespace latmech {

using Real = double;
using NodeId = std::int32_t;
using BondId = std::int32_t;

/// n x 3 block of 3D points or vectors (one row per node or bond).
using MatX3 = Eigen::Matrix<Real, Eigen::Dynamic, 3>;
using VecX = Eigen::VectorXd;
using Vec3 = Eigen::RowVector3d;
using Mat3 = Eigen::Matrix3d;
using SpMat = Eigen::SparseMatrix<Real, Eigen::RowMajor>;

}  // namespace latmech
