#include "invprox/koopman.hpp"

#include "invprox/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace invprox {

namespace {

constexpr double kWitnessTol = 1e-8;
constexpr double kZeroImageRatio = 1e-14;

}  // namespace

KoopmanModel::KoopmanModel(std::vector<Expr> atoms, Eigen::MatrixXd basis_coeffs, Eigen::MatrixXd k_approx)
    : atoms_(std::move(atoms)), basis_(std::move(basis_coeffs)), k_approx_(std::move(k_approx)) {
    if (basis_.rows() != static_cast<Eigen::Index>(atoms_.size()))
        throw DimensionMismatch("basis coefficients must have one row per atom");
    if (k_approx_.rows() != basis_.cols() || k_approx_.cols() != basis_.cols())
        throw DimensionMismatch("K_approx must be square with one row per basis function");
}

Eigen::VectorXd KoopmanModel::dictionary_values(std::span<const double> x) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(atoms_.size()));
    for (std::size_t j = 0; j < atoms_.size(); ++j) v(static_cast<Eigen::Index>(j)) = atoms_[j].eval(x);
    return v;
}

Eigen::VectorXd KoopmanModel::features(std::span<const double> x) const {
    return basis_.transpose() * dictionary_values(x);
}

KoopmanModel build_model(std::vector<Expr> atoms, const KoopmanGramBlocks& blocks, double rank_tol) {
    if (static_cast<Eigen::Index>(atoms.size()) != blocks.atom_count())
        throw DimensionMismatch("Gram blocks do not match the dictionary size");
    const auto orth = geometry::orthonormalize<double>(blocks.psi_psi, rank_tol);
    const Eigen::MatrixXd& b = orth.coeffs;
    // <K psi_a, psi_b> = psi_kpsi(b, a)
    Eigen::MatrixXd k = b.transpose() * blocks.psi_kpsi.transpose() * b;
    return KoopmanModel(std::move(atoms), b, std::move(k));
}

KoopmanModel build_model(std::vector<Expr> atoms, const Space& space, const DynamicsMap* map, double rank_tol) {
    const auto blocks = koopman_gram_blocks(space, atoms, map);
    return build_model(std::move(atoms), blocks, rank_tol);
}

ProximityAnalysis::ProximityAnalysis(const KoopmanGramBlocks& blocks, double rank_tol) : rank_tol_(rank_tol) {
    const Eigen::Index m = blocks.atom_count();
    if (m == 0) throw DegenerateSpace("dictionary is empty");

    const auto s_orth = geometry::orthonormalize<double>(blocks.psi_psi, rank_tol);
    dim_s_ = s_orth.rank;
    s_orth_ = s_orth.coeffs;

    // Orthonormal basis Phi of K S from the generators K psi.
    if (!(blocks.kpsi_kpsi.cwiseAbs().maxCoeff() > 0.0))
        throw DegenerateSpace("the Koopman image of the subspace is zero");
    const auto ks_orth = geometry::orthonormalize<double>(blocks.kpsi_kpsi, rank_tol);
    dim_ks_ = ks_orth.rank;

    // Generators of W: [psi, Phi] = [psi, K psi] * concat.
    Eigen::MatrixXd concat = Eigen::MatrixXd::Zero(2 * m, m + dim_ks_);
    concat.topLeftCorner(m, m).setIdentity();
    concat.bottomRightCorner(m, dim_ks_) = ks_orth.coeffs;
    const Eigen::MatrixXd raw_gram = blocks.full();
    const Eigen::MatrixXd gram_w = concat.transpose() * raw_gram * concat;

    isomorphism_ = geometry::build_isomorphism<double>(gram_w, rank_tol);

    // Coordinates of the raw generators psi_j and K psi_j.
    const Eigen::MatrixXd raw_coords = (concat * isomorphism_.basis_coeffs).transpose() * raw_gram;
    s_coords_ = raw_coords.leftCols(m);
    ks_coords_ = raw_coords.rightCols(m);

    const Eigen::MatrixXd q_s = isomorphism_.embed_matrix.leftCols(m);
    const Eigen::MatrixXd q_ks = isomorphism_.embed_matrix.rightCols(dim_ks_);
    s_basis_ = geometry::SubspaceBasis<double>::from_spanning(q_s, rank_tol);
    ks_basis_ = geometry::SubspaceBasis<double>::from_spanning(q_ks, rank_tol);

    decomposition_ = geometry::principal_angles(s_basis_, ks_basis_);
    proximity_ = std::clamp(std::sin(decomposition_.max_angle()), 0.0, 1.0);
}

Eigen::VectorXd ProximityAnalysis::top_image_vector() const {
    const auto& d = decomposition_;
    const Eigen::MatrixXd& image_side = d.swapped ? d.u_vectors : d.v_vectors;
    return image_side.col(image_side.cols() - 1);
}

double ProximityAnalysis::witness_residual(const Eigen::VectorXd& coeffs) const {
    return (ks_coords_ * coeffs - top_image_vector()).norm();
}

Eigen::VectorXd ProximityAnalysis::witness() const {
    const Eigen::VectorXd target = top_image_vector();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ks_coords_);
    cod.setThreshold(std::sqrt(rank_tol_));
    Eigen::VectorXd c = cod.solve(target);
    const double res = witness_residual(c);
    if (!(res <= kWitnessTol))
        throw InconsistentSystem("witness solve left residual " + std::to_string(res));
    return c;
}

double ProximityAnalysis::relative_error(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != atom_count()) throw DimensionMismatch("coefficient vector must have one entry per atom");
    const Eigen::VectorXd image = ks_coords_ * coeffs;
    const double f_norm = (s_coords_ * coeffs).norm();
    const double k_norm = image.norm();
    if (!(k_norm > kZeroImageRatio * f_norm) || k_norm == 0.0)
        throw ZeroImage("||K f|| is numerically zero for this function");
    return (image - s_basis_.project(image)).norm() / k_norm;
}

double ProximityAnalysis::restricted_norm() const {
    const Eigen::MatrixXd images = ks_coords_ * s_orth_;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(images);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

std::vector<EigenResidual> ProximityAnalysis::residuals(const KoopmanModel& model) const {
    if (static_cast<Eigen::Index>(model.atoms().size()) != atom_count())
        throw DimensionMismatch("model and analysis use different dictionaries");
    using CMatrix = Eigen::MatrixXcd;
    // Left eigenvectors of K_approx: v^T K = lambda v^T.
    Eigen::EigenSolver<Eigen::MatrixXd> es(model.k_approx().transpose());
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of K_approx failed");

    const CMatrix basis = model.basis_coeffs().cast<std::complex<double>>();
    const CMatrix s = s_coords_.cast<std::complex<double>>();
    const CMatrix ks = ks_coords_.cast<std::complex<double>>();

    // For a complex pair, the complex residual equals the Frobenius residual
    // of the real 2-dimensional invariant pair (phi_re, phi_im).
    std::vector<EigenResidual> out;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const std::complex<double> lambda = es.eigenvalues()(k);
        const Eigen::VectorXcd c = basis * es.eigenvectors().col(k);
        const Eigen::VectorXcd phi = s * c;
        const Eigen::VectorXcd kphi = ks * c;
        out.push_back({lambda, (kphi - lambda * phi).norm() / phi.norm()});
    }
    std::sort(out.begin(), out.end(), [](const EigenResidual& a, const EigenResidual& b) {
        if (std::abs(a.lambda) != std::abs(b.lambda)) return std::abs(a.lambda) > std::abs(b.lambda);
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return a.lambda.imag() > b.lambda.imag();
    });
    return out;
}

ProximityReport ProximityAnalysis::report() const {
    ProximityReport r;
    r.proximity = proximity_;
    r.angles = decomposition_.angles;
    r.dim_s = dim_s_;
    r.dim_ks = dim_ks_;
    r.dim_w = dim_w();
    r.witness_coeffs = witness();
    r.diagnostics.rank_tol = rank_tol_;
    r.diagnostics.witness_residual = witness_residual(r.witness_coeffs);
    r.diagnostics.witness_relative_error = relative_error(r.witness_coeffs);
    if (std::abs(r.diagnostics.witness_relative_error - proximity_) > kWitnessTol)
        throw InconsistentSystem("witness relative error " + std::to_string(r.diagnostics.witness_relative_error) +
                                 " differs from the closed form " + std::to_string(proximity_));
    if (decomposition_.swapped) r.diagnostics.warnings.push_back("numerical rank of K S exceeds that of S");
    return r;
}

ProximityReport invariance_proximity(const std::vector<Expr>& atoms, const Space& space, const DynamicsMap* map,
                                     const Tolerances& tol) {
    const auto blocks = koopman_gram_blocks(space, atoms, map);
    ProximityReport report = ProximityAnalysis(blocks, tol.rank_tol).report();
    report.diagnostics.quad_tol = tol.quad_tol;
    if (const auto* quad = std::get_if<QuadratureSpace>(&space)) {
        report.diagnostics.quadrature_order = quad->order();
        const double change = quadrature_refinement_change(*quad, atoms, *map);
        report.diagnostics.quadrature_refinement_change = change;
        if (change > tol.quad_tol)
            report.diagnostics.warnings.push_back("Gram entries changed by " + std::to_string(change) +
                                                  " (relative) when doubling the quadrature order");
    }
    return report;
}

double prediction_error(const KoopmanModel& model, std::span<const double> x0, std::span<const double> xk, int k) {
    if (k < 0) throw InputError("prediction step must be nonnegative");
    Eigen::VectorXd predicted = model.features(x0);
    for (int step = 0; step < k; ++step) predicted = model.k_approx() * predicted;
    const Eigen::VectorXd actual = model.features(xk);
    const double denom = actual.norm();
    if (!std::isfinite(denom)) throw NonFiniteValue("trajectory features");
    if (denom < 1e-14) throw ZeroNorm("||psi_hat(x(k))|| vanishes");
    return (actual - predicted).norm() / denom * 100.0;
}

std::vector<double> trajectory_error(const KoopmanModel& model, const DynamicsMap& map, std::span<const double> x0,
                                     int k_max) {
    if (k_max < 0) throw InputError("horizon must be nonnegative");
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(k_max));
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> next(x.size());
    Eigen::VectorXd predicted = model.features(x0);
    for (int k = 1; k <= k_max; ++k) {
        map.apply(x, next);
        x.swap(next);
        predicted = model.k_approx() * predicted;
        const Eigen::VectorXd actual = model.features(x);
        const double denom = actual.norm();
        if (!std::isfinite(denom)) throw NonFiniteValue("trajectory features at step " + std::to_string(k));
        if (denom < 1e-14) throw ZeroNorm("||psi_hat(x(" + std::to_string(k) + "))|| vanishes");
        errors.push_back((actual - predicted).norm() / denom * 100.0);
    }
    return errors;
}

namespace {

/// E_K(f) straight from sampled values: least-squares projection of the
/// weighted image samples onto the weighted dictionary samples.
class SampledRelativeError {
public:
    explicit SampledRelativeError(const SampledDictionary& s) {
        const Eigen::VectorXd sw = s.weights.cwiseSqrt();
        values_ = sw.asDiagonal() * s.values;
        images_ = sw.asDiagonal() * s.images;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(values_);
        qr.setThreshold(1e-5);
        const Eigen::Index r = qr.rank();
        range_ = qr.householderQ() * Eigen::MatrixXd::Identity(values_.rows(), r);
    }

    /// Negative when ||K f|| is numerically zero.
    double operator()(const Eigen::VectorXd& c) const {
        const Eigen::VectorXd y = images_ * c;
        const double k_norm = y.norm();
        const double f_norm = (values_ * c).norm();
        if (k_norm == 0.0 || !(k_norm > kZeroImageRatio * f_norm)) return -1.0;
        const Eigen::VectorXd r = y - range_ * (range_.transpose() * y);
        return r.norm() / k_norm;
    }

private:
    Eigen::MatrixXd values_;
    Eigen::MatrixXd images_;
    Eigen::MatrixXd range_;
};

}  // namespace

OracleResult proximity_oracle(const SampledDictionary& sampled, std::size_t n_samples, std::uint64_t seed,
                              int refine_steps) {
    if (n_samples < 1) throw InputError("oracle needs at least one sample");
    const Eigen::Index m = sampled.atom_count();
    const SampledRelativeError error_of(sampled);

    OracleResult out;
    auto evaluate = [&](const Eigen::VectorXd& c) {
        const double e = error_of(c);
        out.largest_evaluated = std::max(out.largest_evaluated, e);
        return e;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd c(m);
    double best = -1.0;
    Eigen::VectorXd best_c = Eigen::VectorXd::Zero(m);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (Eigen::Index j = 0; j < m; ++j) c(j) = normal(rng);
        const double norm = c.norm();
        if (norm == 0.0) {
            ++out.excluded;
            continue;
        }
        c /= norm;
        const double e = evaluate(c);
        if (e < 0.0) {
            ++out.excluded;
            continue;
        }
        if (e > best) {
            best = e;
            best_c = c;
        }
    }
    out.sampled_max = std::max(best, 0.0);

    // Projected finite-difference ascent on the unit sphere.
    constexpr double fd_step = 1e-6;
    double step = 1e-3;
    if (best >= 0.0) {
        Eigen::VectorXd grad(m);
        for (int it = 0; it < refine_steps && step > 1e-14; ++it) {
            for (Eigen::Index j = 0; j < m; ++j) {
                Eigen::VectorXd plus = best_c, minus = best_c;
                plus(j) += fd_step;
                minus(j) -= fd_step;
                const double ep = evaluate(plus);
                const double em = evaluate(minus);
                grad(j) = (ep < 0.0 || em < 0.0) ? 0.0 : (ep - em) / (2.0 * fd_step);
            }
            const Eigen::VectorXd tangent = grad - best_c.dot(grad) * best_c;
            const double tn = tangent.norm();
            if (tn == 0.0) break;
            const Eigen::VectorXd candidate = (best_c + step * tangent / tn).normalized();
            const double e = evaluate(candidate);
            if (e > best) {
                best = e;
                best_c = candidate;
                step *= 2.0;
            } else {
                step *= 0.5;
            }
        }
    }
    out.refined_max = std::max(best, 0.0);
    out.argmax_coeffs = best_c;
    return out;
}

}  // namespace invprox
