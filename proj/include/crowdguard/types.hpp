#pragma once

#include <Eigen/Dense>

#include <vector>

namespace crowdguard {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using IntMatrix = MatrixX<int>;

/// Label value marking an item for which no label is emitted.
inline constexpr int kAbstain = 0;

/// Per-item labels in {1..K}, or kAbstain.
using LabelVector = std::vector<int>;

}  // namespace crowdguard
