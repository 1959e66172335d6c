#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "invprox/expr.hpp"
#include "invprox/geometry.hpp"
#include "invprox/space.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

namespace invprox::testing {

inline const std::vector<std::string> kExampleDynamics = {"0.9*x1", "0.4*(sin(x2)+x1^2)+0.01*x2^2"};
inline const std::vector<std::string> kS1 = {"1", "x1", "x1^2"};
inline const std::vector<std::string> kS2 = {"1", "x1", "x2", "x1^2"};
inline const std::vector<std::string> kS3 = {"1", "x1", "x2", "x1^2", "x2^2"};

inline DynamicsMap example_map() { return DynamicsMap::parse(kExampleDynamics, 2); }
inline Domain unit_square() { return Domain({{-1.0, 1.0}, {-1.0, 1.0}}); }

inline std::vector<Expr> parse_atoms(const std::vector<std::string>& src, int n = 2) {
    std::vector<Expr> out;
    for (const auto& s : src) out.push_back(Expr::parse(s, n));
    return out;
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    return m;
}

inline Eigen::MatrixXcd complex_gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    return gaussian(rng, rows, cols).cast<std::complex<double>>() +
           std::complex<double>(0.0, 1.0) * gaussian(rng, rows, cols).cast<std::complex<double>>();
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, n, n));
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Well-conditioned random SPD matrix.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
    const Eigen::MatrixXd a = gaussian(rng, n, n);
    return a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
}

/// Invertible matrix with singular values in [0.5, 2].
inline Eigen::MatrixXd random_invertible(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.5, 2.0);
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = u(rng);
    return random_orthogonal(rng, n) * s.asDiagonal() * random_orthogonal(rng, n);
}

/// Maximum violation of each principal-vector invariant.
struct InvariantErrors {
    double cross = 0.0;        // <u_i, v_j> - delta_ij cos(theta_i)
    double orthonormal = 0.0;  // U^H U - I and V^H V - I
    double decomposition = 0.0;  // span{u_i, v_i} vs span{u_j, v_j}, i != j
    double sine = 0.0;         // ||v_i - cos(theta_i) u_i|| - sin(theta_i)

    double max() const { return std::max({cross, orthonormal, decomposition, sine}); }
};

template <typename Scalar>
InvariantErrors invariant_errors(const geometry::PrincipalDecomposition<Scalar>& d) {
    using Mat = geometry::Matrix<Scalar>;
    const Mat& u = d.u_vectors;
    const Mat& v = d.v_vectors;
    const Eigen::Index m = d.angles.size();
    InvariantErrors e;
    const Mat uv = v.adjoint() * u;  // (j, i) = <u_i, v_j>
    const Mat uu = u.adjoint() * u;
    const Mat vv = v.adjoint() * v;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double c = std::cos(d.angles(i));
        for (Eigen::Index j = 0; j < m; ++j) {
            const Scalar expected = i == j ? Scalar(c) : Scalar(0.0);
            e.cross = std::max(e.cross, std::abs(uv(j, i) - expected));
            const double delta = i == j ? 1.0 : 0.0;
            e.orthonormal = std::max({e.orthonormal, std::abs(uu(i, j) - delta), std::abs(vv(i, j) - delta)});
            if (i != j)
                e.decomposition = std::max({e.decomposition, std::abs(uu(i, j)), std::abs(vv(i, j)),
                                            std::abs(uv(i, j)), std::abs(uv(j, i))});
        }
        const double resid = (v.col(i) - Scalar(c) * u.col(i)).norm();
        e.sine = std::max(e.sine, std::abs(resid - std::sin(d.angles(i))));
    }
    return e;
}

}  // namespace invprox::testing
