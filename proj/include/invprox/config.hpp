#pragma once

// Run configuration for the invprox command line tool.
//
// JSON schema (unknown keys anywhere are rejected):
//
// {
//   "name":       string, optional label copied into reports
//   "system":     string, optional built-in system ("example_sec7"); supplies
//                 state_dim, domain and dynamics unless given explicitly
//   "state_dim":  positive integer
//   "domain":     [[lo, hi], ...], one interval per state variable
//   "field":      "real" (default)
//   "backend":    {"type": "quadrature", "order": q}
//               | {"type": "empirical", "snapshots": "path.csv"}
//   "dynamics":   [expr, ...]  state_dim components; required for
//                 quadrature, optional for empirical (trajectory simulation)
//   "dictionary": [expr, ...]  nonempty
//   "tolerances": {"rank_tol": 1e-10, "quad_tol": 1e-9}
//   "oracle":     {"n_samples": 10000, "seed": 0, "refine_steps": 200}
//   "experiment": {"n_trajectories": 100, "horizon": 10, "sampling_seed": 0}
// }
//
// Relative snapshot paths are resolved against the config file's directory.

#include "invprox/errors.hpp"
#include "invprox/expr.hpp"
#include "invprox/koopman.hpp"
#include "invprox/space.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace invprox {

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

struct BuiltinSystem {
    std::string name;
    int state_dim;
    std::vector<Interval> domain;
    std::vector<std::string> dynamics;
};

/// Registry of systems that need no user input; currently "example_sec7":
/// x1+ = 0.9 x1, x2+ = 0.4 (sin(x2) + x1^2) + 0.01 x2^2 on [-1, 1]^2.
const BuiltinSystem& builtin_system(const std::string& name);

struct OracleSettings {
    std::size_t n_samples = 10000;
    std::uint64_t seed = 0;
    int refine_steps = 200;
};

struct ExperimentSettings {
    int n_trajectories = 100;
    int horizon = 10;
    std::uint64_t sampling_seed = 0;
};

enum class BackendKind { quadrature, empirical };

struct RunConfig {
    std::string name;
    int state_dim = 0;
    std::optional<Domain> domain;
    BackendKind backend = BackendKind::quadrature;
    int quad_order = QuadratureSpace::kDefaultOrder;
    std::filesystem::path snapshot_path;
    std::vector<std::string> dynamics_src;
    std::vector<std::string> dictionary_src;
    Tolerances tolerances;
    OracleSettings oracle;
    ExperimentSettings experiment;

    std::vector<Expr> atoms;
    std::optional<DynamicsMap> dynamics;

    /// Builds the inner-product space (reads the snapshot CSV if needed).
    Space make_space() const;
};

/// Validates and parses a config document. `base_dir` anchors relative paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace invprox
