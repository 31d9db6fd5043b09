#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reluflow/network.hpp"
#include "reluflow/ode.hpp"
#include "reluflow/pwl.hpp"

namespace reluflow {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RadiusRule { fixed, log, sqrt };

/// Experiment settings, read from a flat `key = value` file.
struct ExperimentConfig {
    std::string rhs = "sin";
    double rhs_value = 1.0;       // used by rhs = const
    std::size_t rhs_pieces = 0;   // 0: continuous in time
    std::size_t dim = 1;
    double k_radius = 1.0;        // test cube K = [-k_radius, k_radius]^d
    std::size_t time_samples = 33;
    std::size_t space_samples = 41;
    std::vector<std::size_t> n_list{8, 16, 32, 64};
    std::vector<std::size_t> k_list{2, 4, 8, 16};
    RadiusRule r_rule = RadiusRule::fixed;
    std::optional<double> r_base; // default max(4, sqrt(d) k_radius + c + 1)
    std::optional<double> block_eps;
    double oracle_tol = 1e-8;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out = "."; // output directory

    void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Right-hand sides by name: zero, sin, tanh, sin_time, const.
RhsSpec make_rhs(const std::string& name, std::size_t dim, double value = 1.0);
RhsSpec make_rhs(const ExperimentConfig& config);

double base_radius(const ExperimentConfig& config, const RhsSpec& rhs);
double radius_for(const ExperimentConfig& config, const RhsSpec& rhs, std::size_t n);

/// space_samples^d points of the test cube, first coordinate slowest.
std::vector<Vector> test_points(const ExperimentConfig& config);
std::vector<double> test_times(const ExperimentConfig& config);

/// Least-squares slope of log(error) against log(n); NaN when fewer than two
/// positive errors are available.
double fit_log_slope(const std::vector<double>& n, const std::vector<double>& error);

struct ConvergenceRow {
    std::size_t n = 0;
    double sup_error = 0.0;
    double apriori_bound = 0.0;
    std::size_t block_neurons = 0;
    std::size_t block_depth = 0;
    std::size_t free_weights = 0;
};

struct ErrorReport {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
    /// max over all sampled ResNet and reference trajectories of |x(t)| - (|y| + c).
    double growth_excess = 0.0;
    double r_base = 0.0;
};

ErrorReport run_convergence(const ExperimentConfig& config);
std::string convergence_csv(const ErrorReport& report);
std::string convergence_summary_json(const ExperimentConfig& config, const ErrorReport& report);

struct ComplexityRow {
    std::size_t n = 0;
    double r_n = 0.0;
    std::size_t neurons = 0;
    std::size_t depth = 0;
    std::size_t free_weights = 0;
    double bound_const = 0.0;
};

struct ComplexityTable {
    std::vector<ComplexityRow> rows;
    /// max / min of bound_const across rows.
    double bound_ratio = 0.0;
};

ComplexityTable run_complexity(const ExperimentConfig& config);
std::string complexity_csv(const ComplexityTable& table);

struct SharedRow {
    std::size_t k = 0;
    std::size_t blocks = 0;
    std::size_t distinct_params = 0;
    double sup_error = 0.0;
};

/// Weight-sharing experiment; the rhs is made piecewise constant with
/// max(1, rhs_pieces) pieces. Block accuracy defaults to 0.01.
std::vector<SharedRow> run_shared(const ExperimentConfig& config);
std::string shared_csv(const std::vector<SharedRow>& rows);

struct CompileResult {
    NetworkParams network;
    ComplexityReport report;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Compiles f and compares the network with the interpolation oracle at
/// `samples` uniform random points of [-r-1, r+1]^d.
CompileResult compile_and_verify(const PWLFunction& f, std::size_t samples = 10000, std::uint64_t seed = 0);

/// Scalar test functions by name: sin, cos, tanh, poly (sum over coordinates
/// of the polynomial with the given coefficients, constant term first).
ScalarField make_function(const std::string& name, const std::vector<double>& coefficients = {});

} // namespace reluflow
