#pragma once

// Inner-product backends for the function space.
//
// Both backends reduce <f,g> to a weighted sum over a fixed point set:
//   quadrature:  sum_j w_j f(p_j) g(p_j), tensor Gauss-Legendre on a box,
//                unnormalized Lebesgue measure (weights sum to the volume);
//   empirical:   (1/N) sum_i f(x_i) g(x_i) over snapshot states.
// Koopman images K psi = psi o T are evaluated at T(p_j) for quadrature and
// at the recorded successor states y_i for empirical data.

#include "invprox/expr.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace invprox {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

class Domain {
public:
    explicit Domain(std::vector<Interval> bounds);

    int dim() const noexcept { return static_cast<int>(bounds_.size()); }
    const std::vector<Interval>& bounds() const noexcept { return bounds_; }
    double volume() const;
    bool contains(std::span<const double> x) const;

private:
    std::vector<Interval> bounds_;
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order);

class QuadratureSpace {
public:
    static constexpr int kDefaultOrder = 20;

    explicit QuadratureSpace(Domain domain, int order_per_dim = kDefaultOrder);

    const Domain& domain() const noexcept { return domain_; }
    int order() const noexcept { return order_; }

    /// Nodes as rows (q^n x n).
    const Eigen::MatrixXd& points() const noexcept { return points_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    Eigen::MatrixXd successors(const DynamicsMap* map) const;

    /// Same nodes with every weight multiplied by c > 0.
    QuadratureSpace scaled(double c) const;

    QuadratureSpace refined() const { return QuadratureSpace(domain_, 2 * order_); }

private:
    Domain domain_;
    int order_;
    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

class EmpiricalSpace {
public:
    /// Uniform weights 1/N.
    EmpiricalSpace(Eigen::MatrixXd snapshots_x, Eigen::MatrixXd snapshots_y);

    /// Explicit nonnegative per-snapshot weights (e.g. quadrature weights
    /// folded into a snapshot set).
    EmpiricalSpace(Eigen::MatrixXd snapshots_x, Eigen::MatrixXd snapshots_y, Eigen::VectorXd weights);

    int state_dim() const noexcept { return static_cast<int>(x_.cols()); }
    const Eigen::MatrixXd& points() const noexcept { return x_; }
    const Eigen::MatrixXd& snapshots_y() const noexcept { return y_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }

    /// Recorded successor states; the map is not consulted.
    Eigen::MatrixXd successors(const DynamicsMap* map) const;

    EmpiricalSpace scaled(double c) const;

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd y_;
    Eigen::VectorXd weights_;
};

using Space = std::variant<QuadratureSpace, EmpiricalSpace>;

const Eigen::MatrixXd& points(const Space& space);
const Eigen::VectorXd& weights(const Space& space);
int state_dim(const Space& space);

/// Symmetric real Gram matrix with optional atom labels.
struct GramMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::string> labels;

    Eigen::Index size() const { return entries.rows(); }
};

double inner_product(const Space& space, const Evaluable& f, const Evaluable& g);

/// Atom values at each point, rows = points, columns = atoms. Throws
/// NonFiniteValue on the first non-finite evaluation.
Eigen::MatrixXd evaluate_atoms(const std::vector<Evaluable>& atoms, const Eigen::MatrixXd& points);

/// Weighted Gram of column-sampled functions, accumulated point by point in
/// fixed order.
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& values, const Eigen::VectorXd& weights);

GramMatrix gram(const Space& space, const std::vector<Evaluable>& atoms);

/// A dictionary and its Koopman images sampled on the backend's point set.
struct SampledDictionary {
    Eigen::MatrixXd values;  // psi_j(p_i)
    Eigen::MatrixXd images;  // psi_j(T(p_i))
    Eigen::VectorXd weights;

    Eigen::Index atom_count() const { return values.cols(); }
};

/// `map` is required for the quadrature backend and ignored for empirical data.
SampledDictionary sample_dictionary(const Space& space, const std::vector<Expr>& atoms, const DynamicsMap* map);

struct KoopmanGramBlocks {
    Eigen::MatrixXd psi_psi;    // <psi_i, psi_j>
    Eigen::MatrixXd psi_kpsi;   // <psi_i, K psi_j>
    Eigen::MatrixXd kpsi_kpsi;  // <K psi_i, K psi_j>

    Eigen::Index atom_count() const { return psi_psi.rows(); }
    /// Gram of the concatenated generator list [psi, K psi].
    Eigen::MatrixXd full() const;
};

KoopmanGramBlocks koopman_gram_blocks(const SampledDictionary& sampled);
KoopmanGramBlocks koopman_gram_blocks(const Space& space, const std::vector<Expr>& atoms, const DynamicsMap* map);

/// Largest entrywise change of the [psi, K psi] Gram when the quadrature
/// order is doubled, relative to the largest Gram entry.
double quadrature_refinement_change(const QuadratureSpace& space, const std::vector<Expr>& atoms,
                                    const DynamicsMap& map);

// Snapshot CSV: header x1..xn,y1..yn, one pair per row.
struct Snapshots {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;
};

Snapshots read_snapshot_csv(std::istream& in);
Snapshots read_snapshot_csv(const std::string& path);
void write_snapshot_csv(std::ostream& out, const Snapshots& snapshots);

}  // namespace invprox
