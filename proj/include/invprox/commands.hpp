#pragma once

// Subcommands of the invprox tool. Each writes its artifacts into
// options.out_dir, prints a short summary to `log`, and returns the process
// exit code (0 ok, 4 internal-consistency failure). Input problems throw
// InputError (exit 2), numerical breakdowns throw NumericalError (exit 3).

#include "invprox/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace invprox {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 2;
inline constexpr int numerical_failure = 3;
inline constexpr int internal_failure = 4;
}  // namespace exit_code

struct CommandOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> quad_order;
    std::optional<double> rank_tol;
};

/// Applies --seed / --quad-order / --rank-tol on top of a config.
void apply_overrides(RunConfig& cfg, const CommandOptions& options);

nlohmann::json proximity_json(const ProximityReport& report);

struct StepStatistics {
    int k = 0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> values, double p);

struct PredictionSummary {
    std::vector<StepStatistics> steps;
    std::size_t used_trajectories = 0;
    std::size_t excluded_trajectories = 0;
};

/// Samples initial conditions uniformly from the domain and collects
/// per-step statistics of the trajectory prediction error.
PredictionSummary run_prediction(const RunConfig& cfg);

struct ResidualRow {
    double lambda_re = 0.0;
    double lambda_im = 0.0;
    double residual = 0.0;
    double bound = 0.0;
    bool violated = false;
};

std::vector<ResidualRow> run_residuals(const RunConfig& cfg);

struct Table1Row {
    std::string subspace;
    std::vector<std::string> dictionary;
    double proximity = 0.0;
};

std::vector<Table1Row> run_table1(const CommandOptions& options);

int cmd_proximity(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_table1(const CommandOptions& options, std::ostream& log);
int cmd_predict(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_oracle(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);
int cmd_residuals(const RunConfig& cfg, const CommandOptions& options, std::ostream& log);

/// Dispatches argv; used by the executable and by in-process tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace invprox
