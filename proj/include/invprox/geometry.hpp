#pragma once

// Subspace geometry in Gram coordinates, generic over the scalar field
// (double or std::complex<double>).
//
// Gram convention: for generators g_1..g_m, G(i, j) = <g_j, g_i>, so that for
// f = sum a_i g_i and h = sum b_i g_i we have <f, h> = b^H G a. Inner products
// are linear in the first argument and conjugate-linear in the second; over
// the reals G is simply the symmetric matrix of pairwise inner products.

#include "invprox/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

namespace invprox::geometry {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

constexpr double kDefaultRankTol = 1e-10;

/// Coefficients of an orthonormal basis for the span of some generators.
template <typename Scalar>
struct Orthonormalization {
    Matrix<Scalar> coeffs;        // m x r, columns ordered by descending eigenvalue
    Eigen::VectorXd eigenvalues;  // all m Gram eigenvalues, descending
    Eigen::Index rank = 0;
};

/// Symmetric orthogonalization B = V_r diag(lambda_r)^(-1/2), keeping the
/// eigenvalues above rank_tol * lambda_max. B^H G B = I_r.
template <typename Scalar>
Orthonormalization<Scalar> orthonormalize(const Matrix<Scalar>& gram, double rank_tol = kDefaultRankTol) {
    if (gram.rows() != gram.cols()) throw DimensionMismatch("Gram matrix must be square");
    if (gram.rows() == 0) throw DegenerateSpace("empty generator list");
    if (!gram.allFinite()) throw NotPSD("Gram matrix has non-finite entries");

    const Matrix<Scalar> sym = (gram + gram.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym);
    if (eig.info() != Eigen::Success) throw NotPSD("eigendecomposition of Gram matrix failed");

    const Eigen::Index m = gram.rows();
    const Eigen::VectorXd ascending = eig.eigenvalues();
    const double lambda_max = ascending(m - 1);
    if (!(lambda_max > 0.0)) throw DegenerateSpace("all generators have zero norm");
    if (ascending(0) < -1e-8 * lambda_max)
        throw NotPSD("Gram matrix has eigenvalue " + std::to_string(ascending(0)) + " below -1e-8 * lambda_max");

    // Descending order; equal eigenvalues keep the solver's column order.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ascending(a) > ascending(b); });

    Orthonormalization<Scalar> out;
    out.eigenvalues.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) out.eigenvalues(k) = ascending(order[static_cast<std::size_t>(k)]);
    while (out.rank < m && out.eigenvalues(out.rank) > rank_tol * lambda_max) ++out.rank;

    out.coeffs.resize(m, out.rank);
    for (Eigen::Index k = 0; k < out.rank; ++k)
        out.coeffs.col(k) = eig.eigenvectors().col(order[static_cast<std::size_t>(k)]) / std::sqrt(out.eigenvalues(k));
    return out;
}

/// Orthonormal basis of a subspace in standard coordinates (columns).
template <typename Scalar>
class SubspaceBasis {
public:
    SubspaceBasis() = default;

    /// Columns must already be orthonormal to 1e-10.
    static SubspaceBasis from_orthonormal(Matrix<Scalar> columns) {
        const Eigen::Index r = columns.cols();
        const double err = (columns.adjoint() * columns - Matrix<Scalar>::Identity(r, r)).cwiseAbs().maxCoeff();
        if (r > 0 && err > 1e-10) throw InputError("basis columns are not orthonormal (error " + std::to_string(err) + ")");
        SubspaceBasis b;
        b.coeffs_ = std::move(columns);
        return b;
    }

    /// Orthonormal basis for the range of `spanning`, dropping directions
    /// whose squared singular value is below rank_tol * sigma_max^2.
    static SubspaceBasis from_spanning(const Matrix<Scalar>& spanning, double rank_tol = kDefaultRankTol) {
        SubspaceBasis b;
        if (spanning.cols() == 0) {
            b.coeffs_.resize(spanning.rows(), 0);
            return b;
        }
        Eigen::BDCSVD<Matrix<Scalar>> svd(spanning, Eigen::ComputeThinU);
        const auto& s = svd.singularValues();
        const double smax = s.size() ? s(0) : 0.0;
        if (!(smax > 0.0)) throw DegenerateSpace("spanning set is zero");
        Eigen::Index r = 0;
        while (r < s.size() && s(r) * s(r) > rank_tol * smax * smax) ++r;
        b.coeffs_ = svd.matrixU().leftCols(r);
        return b;
    }

    Eigen::Index ambient_dim() const { return coeffs_.rows(); }
    Eigen::Index rank() const { return coeffs_.cols(); }
    const Matrix<Scalar>& coeffs() const noexcept { return coeffs_; }

    /// Orthogonal projection of a coordinate vector onto the subspace.
    Vector<Scalar> project(const Vector<Scalar>& y) const { return coeffs_ * (coeffs_.adjoint() * y); }

private:
    Matrix<Scalar> coeffs_;
};

/// Inner-product preserving coordinates for the span W of a generator list:
/// a function with generator coefficients c maps to the vector of its inner
/// products with an orthonormal basis of W.
template <typename Scalar>
struct Isomorphism {
    Matrix<Scalar> basis_coeffs;  // generator coefficients of the orthonormal w-basis
    Matrix<Scalar> embed_matrix;  // dim(W) x m

    Eigen::Index dim() const { return embed_matrix.rows(); }
    Vector<Scalar> embed(const Vector<Scalar>& c) const { return embed_matrix * c; }
    Matrix<Scalar> embed(const Matrix<Scalar>& c) const { return embed_matrix * c; }
};

template <typename Scalar>
Isomorphism<Scalar> build_isomorphism(const Matrix<Scalar>& gram_w, double rank_tol = kDefaultRankTol) {
    auto basis = orthonormalize<Scalar>(gram_w, rank_tol);
    Isomorphism<Scalar> iso;
    iso.embed_matrix = basis.coeffs.adjoint() * gram_w;
    iso.basis_coeffs = std::move(basis.coeffs);
    return iso;
}

/// Jordan principal angles between U and V (dim U >= dim V) with principal
/// vectors in ambient coordinates.
template <typename Scalar>
struct PrincipalDecomposition {
    Eigen::VectorXd angles;   // ascending, in [0, pi/2]
    Matrix<Scalar> u_vectors;  // ambient x m2
    Matrix<Scalar> v_vectors;  // ambient x m2
    Eigen::Index dim_u = 0;
    Eigen::Index dim_v = 0;
    bool swapped = false;  // true if the inputs were exchanged so that dim U >= dim V

    double max_angle() const { return angles.size() ? angles(angles.size() - 1) : 0.0; }
};

/// Cosines are the singular values of Qu^H Qv. Angles whose cosine satisfies
/// sigma^2 > 1/2 are recomputed from the singular values of Qv - Qu Qu^H Qv,
/// which stay accurate as the angle goes to zero.
template <typename Scalar>
PrincipalDecomposition<Scalar> principal_angles(const SubspaceBasis<Scalar>& first,
                                                 const SubspaceBasis<Scalar>& second) {
    if (first.ambient_dim() != second.ambient_dim())
        throw DimensionMismatch("subspaces live in different ambient spaces");

    PrincipalDecomposition<Scalar> out;
    out.swapped = first.rank() < second.rank();
    const auto& qu = out.swapped ? second.coeffs() : first.coeffs();
    const auto& qv = out.swapped ? first.coeffs() : second.coeffs();
    out.dim_u = qu.cols();
    out.dim_v = qv.cols();
    const Eigen::Index m2 = qv.cols();
    out.angles.resize(m2);
    out.u_vectors.resize(qu.rows(), m2);
    out.v_vectors.resize(qv.rows(), m2);
    if (m2 == 0) return out;

    const Matrix<Scalar> cross = qu.adjoint() * qv;
    Eigen::JacobiSVD<Matrix<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd cosines = svd.singularValues().cwiseMin(1.0).cwiseMax(0.0);

    const Matrix<Scalar> residual = qv - qu * cross;
    Eigen::JacobiSVD<Matrix<Scalar>> sine_svd(residual);
    // Sines ascending pair with cosines descending.
    Eigen::VectorXd sines = Eigen::VectorXd::Zero(m2);
    const auto& sv = sine_svd.singularValues();
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(sv.size(), m2); ++k) sines(m2 - 1 - k) = sv(k);

    for (Eigen::Index i = 0; i < m2; ++i) {
        const double c = cosines(i);
        double theta = 0.0;
        if (c * c > 0.5)
            theta = std::asin(std::clamp(sines(i), 0.0, 1.0));
        else
            theta = std::acos(c);
        out.angles(i) = std::clamp(theta, 0.0, std::numbers::pi / 2);

        Vector<Scalar> u = qu * svd.matrixU().col(i);
        const Vector<Scalar> v = qv * svd.matrixV().col(i);
        const Scalar overlap = v.dot(u);  // <u, v> = v^H u
        if (std::abs(overlap) > 0.0) u *= Eigen::numext::conj(overlap) / std::abs(overlap);
        out.u_vectors.col(i) = u;
        out.v_vectors.col(i) = v;
    }
    return out;
}

}  // namespace invprox::geometry
