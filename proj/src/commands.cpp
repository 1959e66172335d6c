#include "invprox/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>

namespace invprox {

using nlohmann::json;

namespace {

constexpr double kBoundSlack = 1e-8;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_output(const CommandOptions& options, const std::string& file) {
    std::filesystem::create_directories(options.out_dir);
    const auto path = options.out_dir / file;
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

void write_json(const CommandOptions& options, const std::string& file, const json& doc) {
    auto out = open_output(options, file);
    out << doc.dump(2) << '\n';
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

const DynamicsMap* dynamics_for_images(const RunConfig& cfg) {
    // Empirical data carry their own successor states.
    return cfg.backend == BackendKind::quadrature ? &*cfg.dynamics : nullptr;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const CommandOptions& options) {
    if (options.seed) {
        cfg.oracle.seed = *options.seed;
        cfg.experiment.sampling_seed = *options.seed;
    }
    if (options.quad_order) {
        if (*options.quad_order < 1) throw ConfigError("--quad-order must be positive");
        cfg.quad_order = *options.quad_order;
    }
    if (options.rank_tol) {
        if (!(*options.rank_tol > 0.0 && *options.rank_tol < 1.0)) throw ConfigError("--rank-tol must lie in (0, 1)");
        cfg.tolerances.rank_tol = *options.rank_tol;
    }
}

json proximity_json(const ProximityReport& r) {
    json diag{
        {"rank_tol", r.diagnostics.rank_tol},
        {"quad_tol", r.diagnostics.quad_tol},
        {"witness_residual", r.diagnostics.witness_residual},
        {"witness_relative_error", r.diagnostics.witness_relative_error},
        {"warnings", r.diagnostics.warnings},
    };
    if (r.diagnostics.quadrature_order) diag["quadrature_order"] = *r.diagnostics.quadrature_order;
    if (r.diagnostics.quadrature_refinement_change)
        diag["quadrature_refinement_change"] = *r.diagnostics.quadrature_refinement_change;
    return json{
        {"invariance_proximity", r.proximity},
        {"principal_angles_rad", to_vector(r.angles)},
        {"dim_S", r.dim_s},
        {"dim_KS", r.dim_ks},
        {"dim_W", r.dim_w},
        {"witness_coeffs", to_vector(r.witness_coeffs)},
        {"diagnostics", diag},
    };
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InputError("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

PredictionSummary run_prediction(const RunConfig& cfg) {
    if (!cfg.dynamics) throw ConfigError("dynamics: required to simulate trajectories");
    if (!cfg.domain) throw ConfigError("domain: required to sample initial conditions");
    const KoopmanModel model =
        build_model(cfg.atoms, cfg.make_space(), dynamics_for_images(cfg), cfg.tolerances.rank_tol);

    std::mt19937_64 rng(cfg.experiment.sampling_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int horizon = cfg.experiment.horizon;
    std::vector<std::vector<double>> per_step(static_cast<std::size_t>(horizon));

    PredictionSummary summary;
    std::vector<double> x0(static_cast<std::size_t>(cfg.state_dim));
    for (int t = 0; t < cfg.experiment.n_trajectories; ++t) {
        for (std::size_t k = 0; k < x0.size(); ++k) {
            const auto& b = cfg.domain->bounds()[k];
            x0[k] = b.lo + (b.hi - b.lo) * unit(rng);
        }
        try {
            const auto errors = trajectory_error(model, *cfg.dynamics, x0, horizon);
            for (int k = 0; k < horizon; ++k)
                per_step[static_cast<std::size_t>(k)].push_back(errors[static_cast<std::size_t>(k)]);
            ++summary.used_trajectories;
        } catch (const ZeroNorm&) {
            ++summary.excluded_trajectories;
        }
    }
    if (summary.used_trajectories == 0) return summary;
    for (int k = 0; k < horizon; ++k) {
        const auto& e = per_step[static_cast<std::size_t>(k)];
        summary.steps.push_back({k + 1, percentile(e, 50.0), percentile(e, 25.0), percentile(e, 75.0),
                                 *std::min_element(e.begin(), e.end()), *std::max_element(e.begin(), e.end())});
    }
    return summary;
}

std::vector<ResidualRow> run_residuals(const RunConfig& cfg) {
    const auto blocks = koopman_gram_blocks(cfg.make_space(), cfg.atoms, dynamics_for_images(cfg));
    const ProximityAnalysis analysis(blocks, cfg.tolerances.rank_tol);
    const KoopmanModel model = build_model(cfg.atoms, blocks, cfg.tolerances.rank_tol);
    const double bound = analysis.restricted_norm() * analysis.proximity();

    std::vector<ResidualRow> rows;
    for (const auto& r : analysis.residuals(model))
        rows.push_back({r.lambda.real(), r.lambda.imag(), r.residual, bound, r.residual > bound + kBoundSlack});
    return rows;
}

std::vector<Table1Row> run_table1(const CommandOptions& options) {
    const auto& sys = builtin_system("example_sec7");
    const std::vector<std::pair<std::string, std::vector<std::string>>> subspaces{
        {"S1", {"1", "x1", "x1^2"}},
        {"S2", {"1", "x1", "x2", "x1^2"}},
        {"S3", {"1", "x1", "x2", "x1^2", "x2^2"}},
    };
    const DynamicsMap map = DynamicsMap::parse(sys.dynamics, sys.state_dim);
    const int order = options.quad_order.value_or(QuadratureSpace::kDefaultOrder);
    if (order < 1) throw ConfigError("--quad-order must be positive");
    Tolerances tol;
    if (options.rank_tol) tol.rank_tol = *options.rank_tol;
    const Space space = QuadratureSpace(Domain(sys.domain), order);

    std::vector<Table1Row> rows;
    for (const auto& [label, dict] : subspaces) {
        std::vector<Expr> atoms;
        for (const auto& s : dict) atoms.push_back(Expr::parse(s, sys.state_dim));
        rows.push_back({label, dict, invariance_proximity(atoms, space, &map, tol).proximity});
    }
    return rows;
}

int cmd_proximity(const RunConfig& cfg, const CommandOptions& options, std::ostream& log) {
    const Space space = cfg.make_space();
    const ProximityReport report = invariance_proximity(cfg.atoms, space, dynamics_for_images(cfg), cfg.tolerances);
    json doc = proximity_json(report);
    if (!cfg.name.empty()) doc["name"] = cfg.name;
    doc["dictionary"] = cfg.dictionary_src;
    write_json(options, "proximity.json", doc);

    log << "invariance proximity: " << fmt17(report.proximity) << '\n'
        << "dim S = " << report.dim_s << ", dim KS = " << report.dim_ks << ", dim W = " << report.dim_w << '\n';
    for (const auto& w : report.diagnostics.warnings) log << "warning: " << w << '\n';
    return exit_code::ok;
}

int cmd_table1(const CommandOptions& options, std::ostream& log) {
    const auto rows = run_table1(options);
    auto csv = open_output(options, "table1.csv");
    csv << "subspace,proximity\n";
    log << "subspace  invariance proximity\n";
    for (const auto& r : rows) {
        csv << r.subspace << ',' << fmt17(r.proximity) << '\n';
        char line[96];
        std::snprintf(line, sizeof line, "%-8s  %.6g\n", r.subspace.c_str(), r.proximity);
        log << line;
    }
    return exit_code::ok;
}

int cmd_predict(const RunConfig& cfg, const CommandOptions& options, std::ostream& log) {
    const PredictionSummary summary = run_prediction(cfg);

    auto csv = open_output(options, "predict.csv");
    csv << "# sampling_seed=" << cfg.experiment.sampling_seed << " n_trajectories=" << cfg.experiment.n_trajectories
        << " horizon=" << cfg.experiment.horizon << '\n';
    csv << "k,median,q25,q75,min,max\n";
    json steps = json::array();
    for (const auto& s : summary.steps) {
        csv << s.k << ',' << fmt17(s.median) << ',' << fmt17(s.q25) << ',' << fmt17(s.q75) << ',' << fmt17(s.min)
            << ',' << fmt17(s.max) << '\n';
        steps.push_back({{"k", s.k}, {"median", s.median}, {"q25", s.q25}, {"q75", s.q75}, {"min", s.min},
                         {"max", s.max}});
    }
    json doc{
        {"sampling_seed", cfg.experiment.sampling_seed},
        {"n_trajectories", cfg.experiment.n_trajectories},
        {"horizon", cfg.experiment.horizon},
        {"used_trajectories", summary.used_trajectories},
        {"excluded_trajectories", summary.excluded_trajectories},
        {"dictionary", cfg.dictionary_src},
        {"steps", steps},
    };
    if (!cfg.name.empty()) doc["name"] = cfg.name;
    write_json(options, "predict.json", doc);

    log << "trajectories used: " << summary.used_trajectories << '\n';
    if (summary.excluded_trajectories)
        log << "warning: " << summary.excluded_trajectories << " trajectories excluded (vanishing feature norm)\n";
    for (const auto& s : summary.steps) log << "k=" << s.k << " median error " << fmt17(s.median) << " %\n";
    return exit_code::ok;
}

int cmd_oracle(const RunConfig& cfg, const CommandOptions& options, std::ostream& log) {
    const Space space = cfg.make_space();
    const SampledDictionary sampled = sample_dictionary(space, cfg.atoms, dynamics_for_images(cfg));
    const double closed_form = ProximityAnalysis(koopman_gram_blocks(sampled), cfg.tolerances.rank_tol).proximity();
    const OracleResult oracle =
        proximity_oracle(sampled, cfg.oracle.n_samples, cfg.oracle.seed, cfg.oracle.refine_steps);

    const json doc{
        {"closed_form", closed_form},
        {"oracle_max", oracle.refined_max},
        {"oracle_sampled_max", oracle.sampled_max},
        {"largest_evaluated", oracle.largest_evaluated},
        {"gap", closed_form - oracle.refined_max},
        {"argmax_coeffs", to_vector(oracle.argmax_coeffs)},
        {"n_samples", cfg.oracle.n_samples},
        {"seed", cfg.oracle.seed},
        {"excluded_samples", oracle.excluded},
    };
    write_json(options, "oracle.json", doc);

    log << "closed form: " << fmt17(closed_form) << "\noracle max:  " << fmt17(oracle.refined_max) << '\n';
    if (oracle.largest_evaluated > closed_form + kBoundSlack) {
        log << "error: sampled relative error " << fmt17(oracle.largest_evaluated)
            << " exceeds the closed-form invariance proximity\n";
        return exit_code::internal_failure;
    }
    return exit_code::ok;
}

int cmd_residuals(const RunConfig& cfg, const CommandOptions& options, std::ostream& log) {
    const auto rows = run_residuals(cfg);
    auto csv = open_output(options, "residuals.csv");
    csv << "lambda_re,lambda_im,residual,bound\n";
    bool violated = false;
    for (const auto& r : rows) {
        csv << fmt17(r.lambda_re) << ',' << fmt17(r.lambda_im) << ',' << fmt17(r.residual) << ',' << fmt17(r.bound)
            << '\n';
        log << "lambda = " << fmt17(r.lambda_re) << (r.lambda_im < 0 ? " - " : " + ") << fmt17(std::abs(r.lambda_im))
            << "i  residual " << fmt17(r.residual) << "  bound " << fmt17(r.bound) << (r.violated ? "  VIOLATED" : "")
            << '\n';
        violated = violated || r.violated;
    }
    return violated ? exit_code::internal_failure : exit_code::ok;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"invprox: invariance proximity of function subspaces under the Koopman operator"};
    app.require_subcommand(1);

    std::string config_path;
    CommandOptions options;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int quad_order = 0;
    double rank_tol = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", config_path, "run configuration (JSON)");
        if (needs_config) c->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override oracle and sampling seeds");
        sub->add_option("--quad-order", quad_order, "override quadrature order per dimension");
        sub->add_option("--rank-tol", rank_tol, "override relative rank tolerance");
    };
    auto* proximity = app.add_subcommand("proximity", "invariance proximity of a dictionary");
    auto* table1 = app.add_subcommand("table1", "built-in example: proximity of S1, S2, S3");
    auto* predict = app.add_subcommand("predict", "trajectory prediction error statistics");
    auto* oracle = app.add_subcommand("oracle", "sampling lower bound versus the closed form");
    auto* residuals = app.add_subcommand("residuals", "eigenpair residuals and their bound");
    for (auto* sub : {proximity, predict, oracle, residuals}) add_common(sub, true);
    add_common(table1, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_code::ok : exit_code::config_error;
    }

    auto* active = app.get_subcommands().front();
    options.out_dir = out_dir;
    if (active->count("--seed")) options.seed = seed;
    if (active->count("--quad-order")) options.quad_order = quad_order;
    if (active->count("--rank-tol")) options.rank_tol = rank_tol;

    try {
        if (active == table1) return cmd_table1(options, out);
        RunConfig cfg = load_config(config_path);
        apply_overrides(cfg, options);
        if (active == proximity) return cmd_proximity(cfg, options, out);
        if (active == predict) return cmd_predict(cfg, options, out);
        if (active == oracle) return cmd_oracle(cfg, options, out);
        return cmd_residuals(cfg, options, out);
    } catch (const InputError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_code::config_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_code::numerical_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code::config_error;
    }
}

}  // namespace invprox
