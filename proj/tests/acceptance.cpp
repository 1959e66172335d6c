// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "invprox/angle_search.hpp"
#include "invprox/commands.hpp"
#include "invprox/config.hpp"
#include "invprox/errors.hpp"
#include "invprox/koopman.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace invprox;
using namespace invprox::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path config_path(const char* name) { return fs::path(INVPROX_SOURCE_DIR) / "configs" / name; }

const Space& square20() {
    static const Space s = QuadratureSpace(unit_square(), 20);
    return s;
}

double proximity_of(const std::vector<std::string>& dict, const Space& space) {
    const DynamicsMap map = example_map();
    return invariance_proximity(parse_atoms(dict), space, &map).proximity;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// -- 1 ------------------------------------------------------------------------
Outcome table1() {
    const fs::path dir = fs::temp_directory_path() / "invprox_acceptance_table1";
    fs::create_directories(dir);
    const std::string out = dir.string();
    const char* argv[] = {"invprox", "table1", "--out", out.c_str()};
    std::ostringstream log, err;
    const auto t0 = Clock::now();
    const int code = run_cli(4, argv, log, err);
    const double elapsed = seconds_since(t0);
    if (code != 0) return {false, "exit code " + std::to_string(code) + ": " + err.str()};

    std::ifstream csv(dir / "table1.csv");
    std::string line;
    std::getline(csv, line);
    std::vector<double> v;
    while (std::getline(csv, line)) v.push_back(std::stod(line.substr(line.find(',') + 1)));
    if (v.size() != 3) return {false, "table1.csv has " + std::to_string(v.size()) + " rows"};
    const bool ok = v[0] <= 1e-8 && std::abs(v[1] - 0.048) <= 0.002 && std::abs(v[2] - 0.823) <= 0.005 && elapsed < 10.0;
    return {ok, "S1=" + fmt("%.3g", v[0]) + " S2=" + fmt("%.6f", v[1]) + " S3=" + fmt("%.6f", v[2]) +
                    " time=" + fmt("%.3f", elapsed) + "s"};
}

// -- 2 ------------------------------------------------------------------------
Outcome oracle() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (const char* name : {"s2.json", "s3.json"}) {
        const RunConfig cfg = load_config(config_path(name));
        const auto sampled = sample_dictionary(cfg.make_space(), cfg.atoms, &*cfg.dynamics);
        const double closed = ProximityAnalysis(koopman_gram_blocks(sampled), cfg.tolerances.rank_tol).proximity();
        const auto o = proximity_oracle(sampled, 10000, cfg.oracle.seed, cfg.oracle.refine_steps);
        const bool tight = o.refined_max >= 0.99 * closed;
        const bool below = o.largest_evaluated <= closed + 1e-8;
        ok = ok && tight && below;
        detail += cfg.name + ": oracle=" + fmt("%.10f", o.refined_max) + " closed=" + fmt("%.10f", closed) +
                  " max_seen=" + fmt("%.10f", o.largest_evaluated) + "; ";
    }
    const double elapsed = seconds_since(t0);
    return {ok && elapsed < 60.0, detail + "time=" + fmt("%.3f", elapsed) + "s"};
}

// -- 3 ------------------------------------------------------------------------
Outcome isomorphism_suite() {
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<int> dim(2, 8);
    double ip_err = 0.0, angle_err = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = dim(rng);
        const Eigen::MatrixXd g = random_spd(rng, n);
        const auto iso = geometry::build_isomorphism<double>(g);
        for (int s = 0; s < 10; ++s) {
            const Eigen::VectorXd a = gaussian(rng, n, 1).normalized(), b = gaussian(rng, n, 1).normalized();
            ip_err = std::max(ip_err, std::abs(a.dot(g * b) - iso.embed(a).dot(iso.embed(b))) / g.norm());
        }
        // Generators split into U (first half) and V (rest); second isomorphism from a Cholesky factor.
        const int k = n / 2;
        const Eigen::MatrixXd lt = g.llt().matrixU();
        const auto d1 = geometry::principal_angles(
            geometry::SubspaceBasis<double>::from_spanning(iso.embed_matrix.leftCols(k)),
            geometry::SubspaceBasis<double>::from_spanning(iso.embed_matrix.rightCols(n - k)));
        const auto d2 = geometry::principal_angles(geometry::SubspaceBasis<double>::from_spanning(lt.leftCols(k)),
                                                   geometry::SubspaceBasis<double>::from_spanning(lt.rightCols(n - k)));
        angle_err = std::max(angle_err, (d1.angles - d2.angles).cwiseAbs().maxCoeff());
    }
    return {ip_err <= 1e-10 && angle_err <= 1e-10,
            "inner-product err=" + fmt("%.2e", ip_err) + " angle err=" + fmt("%.2e", angle_err)};
}

// -- 4 ------------------------------------------------------------------------
Outcome principal_angle_oracle() {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> amb(2, 6);
    double search_err = 0.0, inv_err = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int n = amb(rng);
        std::uniform_int_distribution<int> dims(1, std::min(3, n));
        const auto u = geometry::SubspaceBasis<double>::from_spanning(gaussian(rng, n, dims(rng)));
        const auto v = geometry::SubspaceBasis<double>::from_spanning(gaussian(rng, n, dims(rng)));
        const auto d = geometry::principal_angles(u, v);
        const Eigen::VectorXd searched = geometry::principal_angles_search(u, v);
        search_err = std::max(search_err, (d.angles - searched).cwiseAbs().maxCoeff());
        inv_err = std::max(inv_err, invariant_errors(d).max());
    }
    return {search_err <= 1e-6 && inv_err <= 1e-8,
            "search vs SVD err=" + fmt("%.2e", search_err) + " invariant err=" + fmt("%.2e", inv_err)};
}

// -- 5 ------------------------------------------------------------------------
std::vector<std::string> reparameterize(const std::vector<std::string>& dict, const Eigen::MatrixXd& a) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        std::string s;
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            s += (i ? "+(" : "(") + fmt("%.17g", a(i, j)) + ")*(" + dict[static_cast<std::size_t>(i)] + ")";
        out.push_back(s);
    }
    return out;
}

Outcome invariance_under_parameterization() {
    std::mt19937_64 rng(505);
    double err = 0.0;
    for (const auto* dict : {&kS2, &kS3}) {
        const double base = proximity_of(*dict, square20());
        for (int t = 0; t < 20; ++t) {
            const auto a = random_invertible(rng, static_cast<Eigen::Index>(dict->size()));
            err = std::max(err, std::abs(proximity_of(reparameterize(*dict, a), square20()) - base));
        }
        for (double c : {1e-3, 0.25, 7.5, 1e4}) {
            const Space scaled = std::get<QuadratureSpace>(square20()).scaled(c);
            err = std::max(err, std::abs(proximity_of(*dict, scaled) - base));
        }
    }
    return {err <= 1e-9, "max change=" + fmt("%.2e", err)};
}

// -- 6 ------------------------------------------------------------------------
Outcome trajectory_ordering() {
    const auto s1 = run_prediction(load_config(config_path("s1.json")));
    const auto s2 = run_prediction(load_config(config_path("s2.json")));
    const auto s3 = run_prediction(load_config(config_path("s3.json")));
    bool ok = s1.steps.size() == 10 && s2.steps.size() == 10 && s3.steps.size() == 10 &&
              s2.used_trajectories == 100 && s3.used_trajectories == 100;
    double s1_max = 0.0;
    std::string medians;
    for (std::size_t k = 0; ok && k < 10; ++k) {
        ok = ok && s2.steps[k].median < s3.steps[k].median;
        s1_max = std::max(s1_max, s1.steps[k].max);
        if (k == 0 || k == 9)
            medians += " k=" + std::to_string(k + 1) + ": S2=" + fmt("%.3f", s2.steps[k].median) +
                       "% S3=" + fmt("%.3f", s3.steps[k].median) + "%";
    }
    ok = ok && s1_max <= 1e-8;
    return {ok, "S1 max err=" + fmt("%.2e", s1_max) + "%;" + medians};
}

// -- 7 ------------------------------------------------------------------------
Outcome residual_bound() {
    double worst = -1e300;  // max of residual - bound
    std::size_t pairs = 0;
    auto check = [&](const std::vector<ResidualRow>& rows) {
        for (const auto& r : rows) {
            worst = std::max(worst, r.residual - r.bound);
            ++pairs;
        }
    };
    for (const char* name : {"s1.json", "s2.json", "s3.json"}) check(run_residuals(load_config(config_path(name))));

    // Empirical backend: uniformly sampled snapshot pairs.
    const DynamicsMap map = example_map();
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd x(2000, 2), y(2000, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const std::vector<double> p{u(rng), u(rng)};
        const auto q = map.apply(p);
        x.row(i) << p[0], p[1];
        y.row(i) << q[0], q[1];
    }
    const Space emp = EmpiricalSpace(x, y);
    for (const auto* dict : {&kS1, &kS2, &kS3}) {
        const auto atoms = parse_atoms(*dict);
        const auto blocks = koopman_gram_blocks(emp, atoms, nullptr);
        const ProximityAnalysis a(blocks);
        const double bound = a.restricted_norm() * a.proximity();
        for (const auto& r : a.residuals(build_model(atoms, blocks))) {
            worst = std::max(worst, r.residual - bound);
            ++pairs;
        }
    }
    return {worst <= 1e-8, std::to_string(pairs) + " eigenpairs, max(residual - bound)=" + fmt("%.3e", worst)};
}

// -- 8 ------------------------------------------------------------------------
Outcome angle_expansion_identity() {
    const DynamicsMap map = example_map();
    std::mt19937_64 rng(808);
    double err = 0.0;
    for (const auto* dict : {&kS1, &kS2, &kS3}) {
        const ProximityAnalysis a(koopman_gram_blocks(square20(), parse_atoms(*dict), &map));
        const auto& d = a.decomposition();
        const Eigen::MatrixXd& image_side = d.swapped ? d.u_vectors : d.v_vectors;
        if (image_side.cols() != a.dim_ks()) return {false, "principal vectors do not span K S"};
        for (int t = 0; t < 200; ++t) {
            const Eigen::VectorXd c = gaussian(rng, a.atom_count(), 1);
            const double e = a.relative_error(c);
            const Eigen::VectorXd alpha = image_side.transpose() * (a.ks_coords() * c);
            const double expansion =
                (alpha.array().square() * d.angles.array().sin().square()).sum() / alpha.squaredNorm();
            err = std::max(err, std::abs(e * e - expansion));
        }
    }
    return {err <= 1e-8, "600 functions, max err=" + fmt("%.2e", err)};
}

// -- 9 ------------------------------------------------------------------------
Outcome empirical_consistency() {
    const DynamicsMap map = example_map();
    const auto& q = std::get<QuadratureSpace>(square20());
    const Space nodes = EmpiricalSpace(q.points(), q.successors(&map), q.weights());
    double err = 0.0;
    for (const auto* dict : {&kS1, &kS2, &kS3})
        err = std::max(err, std::abs(proximity_of(*dict, nodes) - proximity_of(*dict, square20())));
    return {err <= 1e-6, "max difference=" + fmt("%.2e", err)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 Table 1 reproduction", table1},
        {"2 oracle tightness", oracle},
        {"3 isomorphism suite", isomorphism_suite},
        {"4 principal-angle oracle", principal_angle_oracle},
        {"5 basis/measure invariance", invariance_under_parameterization},
        {"6 trajectory error ordering", trajectory_ordering},
        {"7 eigenpair residual bound", residual_bound},
        {"8 angle expansion identity", angle_expansion_identity},
        {"9 empirical/quadrature consistency", empirical_consistency},
    };
    int failures = 0;
    for (const auto& [label, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS " : "FAIL ") << label << " | " << o.detail << std::endl;
    }
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all passed")
              << std::endl;
    return failures ? 1 : 0;
}
