#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace dnnopt {

/// Latin hypercube sample of `n` points in [0, 1]^dim, one point per stratum per axis.
/// Points are the columns of the result.
Eigen::MatrixXd latin_hypercube(int n, int dim, std::uint64_t seed);

/// `n` independent uniform points in [0, 1]^dim, as columns.
Eigen::MatrixXd uniform_samples(int n, int dim, std::uint64_t seed);

} // namespace dnnopt
