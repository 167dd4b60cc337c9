#include "dnnopt/sampling.hpp"

#include "dnnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace dnnopt {

Eigen::MatrixXd latin_hypercube(int n, int dim, std::uint64_t seed)
{
    if (n <= 0 || dim <= 0)
        throw ContractError("latin_hypercube needs positive n and dim");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd points(dim, n);
    std::vector<int> strata(static_cast<std::size_t>(n));
    for (int j = 0; j < dim; ++j) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), rng);
        for (int k = 0; k < n; ++k) {
            const double u = (strata[static_cast<std::size_t>(k)] + unit(rng)) / n;
            // unit() may round up to 1 after division; keep inside the stratum
            points(j, k) = std::min(u, std::nextafter((strata[static_cast<std::size_t>(k)] + 1.0) / n, 0.0));
        }
    }
    return points;
}

Eigen::MatrixXd uniform_samples(int n, int dim, std::uint64_t seed)
{
    if (n < 0 || dim <= 0)
        throw ContractError("uniform_samples needs non-negative n and positive dim");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd points(dim, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < dim; ++j)
            points(j, k) = unit(rng);
    return points;
}

} // namespace dnnopt
