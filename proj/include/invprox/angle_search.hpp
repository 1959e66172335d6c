#pragma once

// Principal angles by direct maximization of |<u, v>| over unit vectors,
// deflating by orthogonality to earlier principal vectors. Real field,
// subspaces of dimension at most 3. Used as an independent check of the
// SVD route in geometry.hpp.

#include "invprox/geometry.hpp"

namespace invprox::geometry {

struct SearchBudget {
    int grid_per_angle = 96;      // samples per spherical coordinate
    int max_ascent_steps = 20000;  // per recursion step
    double stationarity_tol = 1e-13;
};

Eigen::VectorXd principal_angles_search(const SubspaceBasis<double>& first, const SubspaceBasis<double>& second,
                                        const SearchBudget& budget = {});

}  // namespace invprox::geometry
