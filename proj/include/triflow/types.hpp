#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SparseCore>
#include <array>
#include <stdexcept>
#include <string>

namespace triflow {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using MatXi = Eigen::MatrixXi;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Error taxonomy mapped onto CLI exit codes: validation -> 1, runtime -> 2,
// usage/config -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct RuntimeFailure : Error {
  using Error::Error;
};
struct SingularGeometryError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};
struct FoldOverError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};
struct ConvergenceError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};
struct SolverError : RuntimeFailure {
  using RuntimeFailure::RuntimeFailure;
};
struct UsageError : Error {
  using Error::Error;
};

inline constexpr double kElementMeasureFloor = 1e-10;

// Orders of the six junction conditions; conditions 1 and 4 are imposed as
// essential constraints, 2,3 and 5,6 enter as natural boundary loads.
inline constexpr std::array<int, 6> kBoundaryConditionOrder = {0, 1, 1, 2, 3, 3};

}  // namespace triflow
