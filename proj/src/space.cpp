#include "invprox/space.hpp"

#include "invprox/errors.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

namespace invprox {

namespace {

std::string describe_point(std::span<const double> x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ')';
    return os.str();
}

std::span<const double> row_span(const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& m,
                                 Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_finite_matrix(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw InputError(std::string(what) + " contains non-finite entries");
}

}  // namespace

Domain::Domain(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
    if (bounds_.empty()) throw InputError("domain needs at least one interval");
    for (const auto& b : bounds_)
        if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi))
            throw InputError("domain intervals must be finite with lo < hi");
}

double Domain::volume() const {
    double v = 1.0;
    for (const auto& b : bounds_) v *= b.hi - b.lo;
    return v;
}

bool Domain::contains(std::span<const double> x) const {
    if (x.size() != bounds_.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (x[k] < bounds_[k].lo || x[k] > bounds_[k].hi) return false;
    return true;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
    if (order < 1) throw InputError("quadrature order must be positive");
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
        gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(order)), &gsl_integration_glfixed_table_free);
    if (!table) throw Error("failed to allocate Gauss-Legendre table");

    std::vector<std::pair<double, double>> nodes(static_cast<std::size_t>(order));
    for (std::size_t i = 0; i < nodes.size(); ++i)
        gsl_integration_glfixed_point(-1.0, 1.0, i, &nodes[i].first, &nodes[i].second, table.get());
    std::sort(nodes.begin(), nodes.end());

    std::vector<double> x(nodes.size()), w(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        x[i] = nodes[i].first;
        w[i] = nodes[i].second;
    }
    return {std::move(x), std::move(w)};
}

QuadratureSpace::QuadratureSpace(Domain domain, int order_per_dim) : domain_(std::move(domain)), order_(order_per_dim) {
    const auto [ref_x, ref_w] = gauss_legendre(order_per_dim);
    const int n = domain_.dim();
    const auto q = static_cast<Eigen::Index>(order_per_dim);

    Eigen::Index total = 1;
    for (int k = 0; k < n; ++k) total *= q;
    points_.resize(total, n);
    weights_.resize(total);

    // Row index in base q, first coordinate most significant.
    std::vector<Eigen::Index> digit(static_cast<std::size_t>(n), 0);
    for (Eigen::Index row = 0; row < total; ++row) {
        double w = 1.0;
        for (int k = 0; k < n; ++k) {
            const auto& b = domain_.bounds()[static_cast<std::size_t>(k)];
            const double half = 0.5 * (b.hi - b.lo);
            const double mid = 0.5 * (b.hi + b.lo);
            const auto d = static_cast<std::size_t>(digit[static_cast<std::size_t>(k)]);
            points_(row, k) = mid + half * ref_x[d];
            w *= half * ref_w[d];
        }
        weights_(row) = w;
        for (int k = n - 1; k >= 0; --k) {
            auto& dk = digit[static_cast<std::size_t>(k)];
            if (++dk < q) break;
            dk = 0;
        }
    }
}

Eigen::MatrixXd QuadratureSpace::successors(const DynamicsMap* map) const {
    if (map == nullptr) throw InputError("quadrature backend needs a dynamics map to form Koopman images");
    if (map->state_dim() != domain_.dim())
        throw DimensionMismatch("dynamics map dimension " + std::to_string(map->state_dim()) +
                                " does not match domain dimension " + std::to_string(domain_.dim()));
    const RowMatrix pts = points_;
    RowMatrix out(pts.rows(), pts.cols());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        std::span<double> dst(out.data() + i * out.cols(), static_cast<std::size_t>(out.cols()));
        map->apply(row_span(pts, i), dst);
    }
    return out;
}

QuadratureSpace QuadratureSpace::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("weight scale must be positive and finite");
    QuadratureSpace copy = *this;
    copy.weights_ *= c;
    return copy;
}

EmpiricalSpace::EmpiricalSpace(Eigen::MatrixXd snapshots_x, Eigen::MatrixXd snapshots_y)
    : EmpiricalSpace(snapshots_x, snapshots_y,
                     Eigen::VectorXd::Constant(snapshots_x.rows(),
                                               snapshots_x.rows() > 0 ? 1.0 / static_cast<double>(snapshots_x.rows())
                                                                      : 0.0)) {}

EmpiricalSpace::EmpiricalSpace(Eigen::MatrixXd snapshots_x, Eigen::MatrixXd snapshots_y, Eigen::VectorXd weights)
    : x_(std::move(snapshots_x)), y_(std::move(snapshots_y)), weights_(std::move(weights)) {
    if (x_.rows() < 1) throw InputError("empirical space needs at least one snapshot");
    if (x_.rows() != y_.rows() || x_.cols() != y_.cols())
        throw DimensionMismatch("snapshot matrices x and y must have the same shape");
    if (weights_.size() != x_.rows()) throw DimensionMismatch("one weight per snapshot required");
    check_finite_matrix(x_, "snapshot states");
    check_finite_matrix(y_, "snapshot successors");
    if (!weights_.allFinite() || (weights_.array() < 0.0).any())
        throw InputError("snapshot weights must be finite and nonnegative");
}

Eigen::MatrixXd EmpiricalSpace::successors(const DynamicsMap* /*map*/) const { return y_; }

EmpiricalSpace EmpiricalSpace::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("weight scale must be positive and finite");
    return EmpiricalSpace(x_, y_, weights_ * c);
}

const Eigen::MatrixXd& points(const Space& space) {
    return std::visit([](const auto& s) -> const Eigen::MatrixXd& { return s.points(); }, space);
}

const Eigen::VectorXd& weights(const Space& space) {
    return std::visit([](const auto& s) -> const Eigen::VectorXd& { return s.weights(); }, space);
}

int state_dim(const Space& space) { return static_cast<int>(points(space).cols()); }

Eigen::MatrixXd evaluate_atoms(const std::vector<Evaluable>& atoms, const Eigen::MatrixXd& pts) {
    const RowMatrix rows = pts;
    Eigen::MatrixXd values(pts.rows(), static_cast<Eigen::Index>(atoms.size()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const auto x = row_span(rows, i);
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const double v = atoms[j](x);
            if (!std::isfinite(v)) throw NonFiniteValue("atom " + std::to_string(j) + ", point " + describe_point(x));
            values(i, static_cast<Eigen::Index>(j)) = v;
        }
    }
    return values;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& values, const Eigen::VectorXd& w) {
    if (values.rows() != w.size()) throw DimensionMismatch("one weight per sample row required");
    const Eigen::Index m = values.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index p = 0; p < values.rows(); ++p) {
        const double wp = w(p);
        for (Eigen::Index j = 0; j < m; ++j) {
            const double a = wp * values(p, j);
            for (Eigen::Index i = 0; i <= j; ++i) g(i, j) += a * values(p, i);
        }
    }
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = j + 1; i < m; ++i) g(i, j) = g(j, i);
    return g;
}

double inner_product(const Space& space, const Evaluable& f, const Evaluable& g) {
    const Eigen::MatrixXd vals = evaluate_atoms({f, g}, points(space));
    const Eigen::VectorXd& w = weights(space);
    double acc = 0.0;
    for (Eigen::Index p = 0; p < vals.rows(); ++p) acc += w(p) * vals(p, 0) * vals(p, 1);
    return acc;
}

GramMatrix gram(const Space& space, const std::vector<Evaluable>& atoms) {
    if (atoms.empty()) throw InputError("gram needs at least one atom");
    GramMatrix out;
    out.entries = weighted_gram(evaluate_atoms(atoms, points(space)), weights(space));
    return out;
}

SampledDictionary sample_dictionary(const Space& space, const std::vector<Expr>& atoms, const DynamicsMap* map) {
    if (atoms.empty()) throw InputError("dictionary must contain at least one atom");
    const int n = state_dim(space);
    std::vector<Evaluable> evals;
    evals.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (a.state_dim() != 0 && a.state_dim() != n)
            throw DimensionMismatch("atom '" + a.to_string() + "' does not match state dimension " + std::to_string(n));
        evals.push_back(a.as_evaluable());
    }
    const Eigen::MatrixXd next = std::visit([map](const auto& s) { return s.successors(map); }, space);

    SampledDictionary out;
    out.values = evaluate_atoms(evals, points(space));
    out.images = evaluate_atoms(evals, next);
    out.weights = weights(space);
    return out;
}

Eigen::MatrixXd KoopmanGramBlocks::full() const {
    const Eigen::Index m = atom_count();
    Eigen::MatrixXd g(2 * m, 2 * m);
    g.topLeftCorner(m, m) = psi_psi;
    g.topRightCorner(m, m) = psi_kpsi;
    g.bottomLeftCorner(m, m) = psi_kpsi.transpose();
    g.bottomRightCorner(m, m) = kpsi_kpsi;
    return g;
}

KoopmanGramBlocks koopman_gram_blocks(const SampledDictionary& sampled) {
    const Eigen::Index m = sampled.atom_count();
    Eigen::MatrixXd both(sampled.values.rows(), 2 * m);
    both << sampled.values, sampled.images;
    const Eigen::MatrixXd g = weighted_gram(both, sampled.weights);

    KoopmanGramBlocks blocks;
    blocks.psi_psi = g.topLeftCorner(m, m);
    blocks.psi_kpsi = g.topRightCorner(m, m);
    blocks.kpsi_kpsi = g.bottomRightCorner(m, m);
    return blocks;
}

KoopmanGramBlocks koopman_gram_blocks(const Space& space, const std::vector<Expr>& atoms, const DynamicsMap* map) {
    return koopman_gram_blocks(sample_dictionary(space, atoms, map));
}

double quadrature_refinement_change(const QuadratureSpace& space, const std::vector<Expr>& atoms,
                                    const DynamicsMap& map) {
    const Eigen::MatrixXd coarse = koopman_gram_blocks(Space{space}, atoms, &map).full();
    const Eigen::MatrixXd fine = koopman_gram_blocks(Space{space.refined()}, atoms, &map).full();
    const double scale = coarse.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (fine - coarse).cwiseAbs().maxCoeff() / scale;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Snapshots read_snapshot_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("snapshot CSV is empty");
    const auto header = split_csv(line);
    if (header.empty() || header.size() % 2 != 0)
        throw InputError("snapshot CSV header must list x1..xn,y1..yn");
    const std::size_t n = header.size() / 2;
    for (std::size_t k = 0; k < n; ++k) {
        if (header[k] != "x" + std::to_string(k + 1) || header[n + k] != "y" + std::to_string(k + 1))
            throw InputError("snapshot CSV header must be x1..x" + std::to_string(n) + ",y1..y" + std::to_string(n));
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 2 * n)
            throw InputError("snapshot CSV line " + std::to_string(line_no) + ": expected " + std::to_string(2 * n) +
                             " values, got " + std::to_string(cells.size()));
        std::vector<double> row(2 * n);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            std::size_t used = 0;
            try {
                row[k] = std::stod(cells[k], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[k].size() || !std::isfinite(row[k]))
                throw InputError("snapshot CSV line " + std::to_string(line_no) + ": bad number '" + cells[k] + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError("snapshot CSV has no data rows");

    Snapshots s;
    s.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    s.y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < n; ++k) {
            s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
            s.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][n + k];
        }
    return s;
}

Snapshots read_snapshot_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open snapshot file '" + path + "'");
    return read_snapshot_csv(in);
}

void write_snapshot_csv(std::ostream& out, const Snapshots& s) {
    const Eigen::Index n = s.x.cols();
    for (Eigen::Index k = 0; k < n; ++k) out << (k ? "," : "") << 'x' << k + 1;
    for (Eigen::Index k = 0; k < n; ++k) out << ",y" << k + 1;
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
        for (Eigen::Index k = 0; k < 2 * n; ++k) {
            const double v = k < n ? s.x(i, k) : s.y(i, k - n);
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << (k ? "," : "") << buf;
        }
        out << '\n';
    }
}

}  // namespace invprox
