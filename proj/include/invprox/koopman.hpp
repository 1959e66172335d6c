#pragma once

// Projected Koopman models and their invariance proximity.
//
// Conventions used throughout:
//  * a function in S is f = c^T psi for a coefficient vector c over the
//    dictionary atoms psi_1..psi_m;
//  * K_approx follows the row convention K psi_hat ~ K_approx psi_hat for the
//    orthonormalized dictionary psi_hat, i.e.
//        K_approx(i, j) = <K psi_hat_i, psi_hat_j>,
//    so f = v^T psi_hat is predicted as K f ~ (v^T K_approx) psi_hat and the
//    model's eigenfunctions come from LEFT eigenvectors of K_approx;
//  * the invariance proximity is sin of the largest principal angle between
//    S and K S, measured in coordinates of W = S + K S.

#include "invprox/expr.hpp"
#include "invprox/geometry.hpp"
#include "invprox/space.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace invprox {

struct Tolerances {
    double rank_tol = geometry::kDefaultRankTol;
    double quad_tol = 1e-9;
};

class KoopmanModel {
public:
    KoopmanModel(std::vector<Expr> atoms, Eigen::MatrixXd basis_coeffs, Eigen::MatrixXd k_approx);

    const std::vector<Expr>& atoms() const noexcept { return atoms_; }
    /// psi_hat_j = sum_i basis_coeffs(i, j) psi_i, orthonormal.
    const Eigen::MatrixXd& basis_coeffs() const noexcept { return basis_; }
    const Eigen::MatrixXd& k_approx() const noexcept { return k_approx_; }
    Eigen::Index rank() const { return k_approx_.rows(); }

    Eigen::VectorXd dictionary_values(std::span<const double> x) const;
    /// psi_hat(x).
    Eigen::VectorXd features(std::span<const double> x) const;

    /// Coefficients (in psi_hat) of the predicted K f for f = v^T psi_hat.
    Eigen::RowVectorXd predict(const Eigen::RowVectorXd& v) const { return v * k_approx_; }

private:
    std::vector<Expr> atoms_;
    Eigen::MatrixXd basis_;
    Eigen::MatrixXd k_approx_;
};

KoopmanModel build_model(std::vector<Expr> atoms, const KoopmanGramBlocks& blocks,
                         double rank_tol = geometry::kDefaultRankTol);
KoopmanModel build_model(std::vector<Expr> atoms, const Space& space, const DynamicsMap* map,
                         double rank_tol = geometry::kDefaultRankTol);

struct Diagnostics {
    double rank_tol = 0.0;
    double quad_tol = 0.0;
    std::optional<int> quadrature_order;
    std::optional<double> quadrature_refinement_change;
    double witness_residual = 0.0;
    double witness_relative_error = 0.0;
    std::vector<std::string> warnings;
};

struct ProximityReport {
    double proximity = 0.0;
    Eigen::VectorXd angles;  // ascending radians
    Eigen::Index dim_s = 0;
    Eigen::Index dim_ks = 0;
    Eigen::Index dim_w = 0;
    Eigen::VectorXd witness_coeffs;
    Diagnostics diagnostics;
};

struct EigenResidual {
    std::complex<double> lambda;
    double residual = 0.0;
};

/// Algorithm for the invariance proximity of span(psi), with the W-coordinate
/// machinery kept around for witnesses, relative errors and residuals.
class ProximityAnalysis {
public:
    explicit ProximityAnalysis(const KoopmanGramBlocks& blocks, double rank_tol = geometry::kDefaultRankTol);

    double proximity() const noexcept { return proximity_; }
    Eigen::Index dim_s() const noexcept { return dim_s_; }
    Eigen::Index dim_ks() const noexcept { return dim_ks_; }
    Eigen::Index dim_w() const noexcept { return isomorphism_.dim(); }
    Eigen::Index atom_count() const { return s_coords_.cols(); }
    double rank_tol() const noexcept { return rank_tol_; }

    const geometry::Isomorphism<double>& isomorphism() const noexcept { return isomorphism_; }
    /// W-coordinates of each atom psi_j and of each image K psi_j.
    const Eigen::MatrixXd& s_coords() const noexcept { return s_coords_; }
    const Eigen::MatrixXd& ks_coords() const noexcept { return ks_coords_; }
    const geometry::SubspaceBasis<double>& s_basis() const noexcept { return s_basis_; }
    const geometry::SubspaceBasis<double>& ks_basis() const noexcept { return ks_basis_; }
    const geometry::PrincipalDecomposition<double>& decomposition() const noexcept { return decomposition_; }

    /// Top principal vector of Q(K S) in W-coordinates.
    Eigen::VectorXd top_image_vector() const;

    /// Min-norm dictionary coefficients c with Q(K c^T psi) = top principal
    /// vector of K S. Throws InconsistentSystem if the solve leaves a residual
    /// above 1e-8.
    Eigen::VectorXd witness() const;
    double witness_residual(const Eigen::VectorXd& coeffs) const;

    /// ||K f - P_S K f|| / ||K f|| for f = c^T psi.
    double relative_error(const Eigen::VectorXd& coeffs) const;

    /// max over f in S of ||K f|| / ||f||.
    double restricted_norm() const;

    /// ||K phi - lambda phi|| / ||phi|| for every eigenpair of the model.
    std::vector<EigenResidual> residuals(const KoopmanModel& model) const;

    ProximityReport report() const;

private:
    double rank_tol_;
    Eigen::Index dim_s_ = 0;
    Eigen::Index dim_ks_ = 0;
    Eigen::MatrixXd s_orth_;  // dictionary coefficients of an orthonormal basis of S
    geometry::Isomorphism<double> isomorphism_;
    Eigen::MatrixXd s_coords_;
    Eigen::MatrixXd ks_coords_;
    geometry::SubspaceBasis<double> s_basis_;
    geometry::SubspaceBasis<double> ks_basis_;
    geometry::PrincipalDecomposition<double> decomposition_;
    double proximity_ = 0.0;
};

/// Full pipeline: sample, assemble Gram blocks, run the analysis, attach a
/// witness and diagnostics (including the quadrature order-doubling check).
ProximityReport invariance_proximity(const std::vector<Expr>& atoms, const Space& space, const DynamicsMap* map,
                                     const Tolerances& tol = {});

/// Percent error ||psi_hat(x_k) - K_approx^k psi_hat(x_0)|| / ||psi_hat(x_k)|| * 100.
double prediction_error(const KoopmanModel& model, std::span<const double> x0, std::span<const double> xk, int k);

/// Errors for k = 1..k_max along x(k+1) = T(x(k)); entry k-1 holds step k.
std::vector<double> trajectory_error(const KoopmanModel& model, const DynamicsMap& map, std::span<const double> x0,
                                     int k_max);

struct OracleResult {
    double sampled_max = 0.0;         // best of the random samples
    double refined_max = 0.0;         // after gradient refinement
    double largest_evaluated = 0.0;   // largest E_K seen at any evaluated coefficient vector
    Eigen::VectorXd argmax_coeffs;
    std::size_t excluded = 0;         // samples with ||K f|| ~ 0
};

/// Lower bound on the invariance proximity by sampling unit coefficient
/// vectors and evaluating E_K directly from sampled function values (no Gram
/// matrices or principal angles), then refining the best sample by
/// finite-difference projected gradient ascent on the unit sphere.
OracleResult proximity_oracle(const SampledDictionary& sampled, std::size_t n_samples, std::uint64_t seed,
                              int refine_steps = 200);

}  // namespace invprox
