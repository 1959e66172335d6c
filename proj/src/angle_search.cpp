#include "invprox/angle_search.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace invprox::geometry {

namespace {

/// Orthonormal basis (columns) of the orthogonal complement of span(found)
/// in R^n.
Eigen::MatrixXd complement(const Eigen::MatrixXd& found, Eigen::Index n) {
    if (found.cols() == 0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(found);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - found.cols());
}

Eigen::VectorXd sphere_point(Eigen::Index p, double theta, double phi) {
    Eigen::VectorXd a(p);
    if (p == 1) {
        a << 1.0;
    } else if (p == 2) {
        a << std::cos(phi), std::sin(phi);
    } else {
        a << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta);
    }
    return a;
}

/// Unit a maximizing ||m a||: dense sphere grid, then projected gradient
/// ascent from the best grid point.
Eigen::VectorXd maximize_on_sphere(const Eigen::MatrixXd& m, const SearchBudget& budget) {
    const Eigen::Index p = m.cols();
    const double pi = std::numbers::pi;
    const int g = budget.grid_per_angle;

    Eigen::VectorXd best = sphere_point(p, 0.0, 0.0);
    double best_val = (m * best).squaredNorm();
    if (p >= 2) {
        // Antipodal points give equal values, so half of each angle range suffices.
        const int n_theta = p == 3 ? g : 1;
        for (int it = 0; it <= n_theta; ++it) {
            const double theta = p == 3 ? pi * it / n_theta : 0.0;
            for (int ip = 0; ip < g; ++ip) {
                const Eigen::VectorXd a = sphere_point(p, theta, pi * ip / g);
                const double val = (m * a).squaredNorm();
                if (val > best_val) {
                    best_val = val;
                    best = a;
                }
            }
        }
    }
    if (p == 1) return best;

    const Eigen::MatrixXd h = m.transpose() * m;
    const double lipschitz = 2.0 * h.norm();
    if (lipschitz == 0.0) return best;
    const double step = 1.0 / lipschitz;

    Eigen::VectorXd a = best;
    double value = best_val;
    double checkpoint = value;
    for (int k = 0; k < budget.max_ascent_steps; ++k) {
        const Eigen::VectorXd grad = 2.0 * h * a;
        const Eigen::VectorXd tangent = grad - a.dot(grad) * a;
        if (tangent.norm() <= budget.stationarity_tol * lipschitz) return a;
        a = (a + step * tangent).normalized();
        value = a.dot(h * a);
        if ((k + 1) % 200 == 0) {
            if (value - checkpoint <= 1e-16 * std::max(value, 1e-300)) return a;
            checkpoint = value;
        }
    }
    throw BudgetExceeded("principal angle search did not converge in " + std::to_string(budget.max_ascent_steps) +
                         " steps");
}

}  // namespace

Eigen::VectorXd principal_angles_search(const SubspaceBasis<double>& first, const SubspaceBasis<double>& second,
                                        const SearchBudget& budget) {
    if (first.ambient_dim() != second.ambient_dim())
        throw DimensionMismatch("subspaces live in different ambient spaces");
    const bool swap = first.rank() < second.rank();
    const Eigen::MatrixXd& qu = swap ? second.coeffs() : first.coeffs();
    const Eigen::MatrixXd& qv = swap ? first.coeffs() : second.coeffs();
    const Eigen::Index m1 = qu.cols();
    const Eigen::Index m2 = qv.cols();
    if (m1 > 3) throw InputError("angle search supports subspaces of dimension at most 3");

    Eigen::MatrixXd u_found(m1, 0);  // previous principal vectors, Qu coordinates
    Eigen::MatrixXd v_found(m2, 0);
    Eigen::VectorXd angles(m2);

    for (Eigen::Index i = 0; i < m2; ++i) {
        const Eigen::MatrixXd cu = complement(u_found, m1);
        const Eigen::MatrixXd cv = complement(v_found, m2);
        const Eigen::MatrixXd u_local = qu * cu;
        const Eigen::MatrixXd v_local = qv * cv;

        // For fixed u, max over unit v in the allowed part of V of |<u, v>| is
        // the norm of the projection of u onto that part.
        const Eigen::MatrixXd cross = v_local.transpose() * u_local;
        const Eigen::VectorXd a = maximize_on_sphere(cross, budget);

        const Eigen::VectorXd u = u_local * a;
        const Eigen::VectorXd proj = v_local * (v_local.transpose() * u);
        const double c = proj.norm();
        const double s = (u - proj).norm();
        angles(i) = std::atan2(s, c);

        const Eigen::VectorXd v = c > 0.0 ? Eigen::VectorXd(proj / c) : Eigen::VectorXd(v_local.col(0));
        u_found.conservativeResize(Eigen::NoChange, i + 1);
        v_found.conservativeResize(Eigen::NoChange, i + 1);
        u_found.col(i) = cu * a;
        v_found.col(i) = qv.transpose() * v;
    }
    return angles;
}

}  // namespace invprox::geometry
