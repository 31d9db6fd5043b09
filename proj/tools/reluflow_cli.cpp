// Command-line front end: convergence, complexity, compile and shared experiments.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "reluflow/experiments.hpp"
#include "reluflow/format.hpp"
#include "reluflow/pwl.hpp"

namespace fs = std::filesystem;
using namespace reluflow;

namespace {

enum ExitCode { ok = 0, config_error = 2, oracle_error = 3, verification_error = 4 };

struct CommonFlags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags)
{
    cmd->add_option("--config", flags.config, "experiment config file (key = value)");
    cmd->add_option("--out", flags.out, "output directory (default: config value or .)");
    cmd->add_option("--seed", flags.seed, "random seed");
    cmd->add_option("--threads", flags.threads, "worker threads");
}

ExperimentConfig resolve(const CommonFlags& flags)
{
    ExperimentConfig config = flags.config.empty() ? ExperimentConfig{} : load_config(flags.config);
    if (flags.seed)
        config.seed = *flags.seed;
    if (flags.threads)
        config.threads = *flags.threads;
    if (flags.out)
        config.out = *flags.out;
    config.validate();
    return config;
}

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_convergence(const CommonFlags& flags)
{
    const auto config = resolve(flags);
    const auto report = run_convergence(config);
    const fs::path out(config.out);
    write_file(out / "convergence.csv", convergence_csv(report));
    write_file(out / "convergence_summary.json", convergence_summary_json(config, report));
    std::cout << "convergence: rhs=" << config.rhs << " d=" << config.dim << " slope=" << format_double(report.slope)
              << " sup_error(n=" << report.rows.back().n << ")=" << format_double(report.rows.back().sup_error)
              << '\n';
    return ok;
}

int cmd_complexity(const CommonFlags& flags)
{
    const auto config = resolve(flags);
    const auto table = run_complexity(config);
    write_file(fs::path(config.out) / "complexity.csv", complexity_csv(table));
    std::cout << "complexity: depth=" << table.rows.front().depth << " bound_const max/min="
              << format_double(table.bound_ratio) << '\n';
    if (!(table.bound_ratio <= 4.0)) {
        std::cerr << "complexity: neurons / (r_n^d n^d) varies by more than a factor 4\n";
        return verification_error;
    }
    return ok;
}

int cmd_shared(const CommonFlags& flags)
{
    const auto config = resolve(flags);
    const auto rows = run_shared(config);
    write_file(fs::path(config.out) / "shared.csv", shared_csv(rows));
    std::cout << "shared: distinct_params=" << rows.front().distinct_params << " sup_error k=" << rows.front().k
              << ": " << format_double(rows.front().sup_error) << ", k=" << rows.back().k << ": "
              << format_double(rows.back().sup_error) << '\n';
    return ok;
}

struct CompileFlags {
    std::string input;
    std::string function;
    std::vector<double> coefficients;
    std::size_t dim = 1;
    double radius = 1.0;
    double delta = 0.25;
    std::size_t samples = 10000;
};

int cmd_compile(const CommonFlags& flags, const CompileFlags& cf)
{
    if (cf.input.empty() == cf.function.empty())
        throw ConfigError("compile: give exactly one of --input or --function");
    const std::uint64_t seed = flags.seed.value_or(0);
    PWLFunction f = [&] {
        try {
            if (!cf.input.empty())
                return pwl_from_json(read_file(cf.input));
            return interpolate(make_function(cf.function, cf.coefficients), cf.dim, cf.radius, cf.delta);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    const auto result = compile_and_verify(f, cf.samples, seed);
    write_file(fs::path(flags.out.value_or(".")) / "network.json", network_to_json(result.network) + "\n");
    std::cout << "compile: d=" << f.input_dim() << " dof=" << f.degrees_of_freedom()
              << " depth=" << result.report.depth << " neurons=" << result.report.neurons
              << " free_weights=" << result.report.free_weights
              << " max_deviation=" << format_double(result.max_deviation) << '\n';
    if (!result.passed) {
        std::cerr << "compile: deviation exceeds " << format_double(result.tolerance) << '\n';
        return verification_error;
    }
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Exact ReLU compilation of piecewise linear functions and ResNet flow approximation"};
    app.require_subcommand(1);

    CommonFlags conv_flags, cplx_flags, shared_flags, compile_flags;
    CompileFlags cf;
    auto* conv = app.add_subcommand("convergence", "sup error of ResNet flows against a reference solver");
    add_common(conv, conv_flags);
    auto* cplx = app.add_subcommand("complexity", "per-block network size as n grows");
    add_common(cplx, cplx_flags);
    auto* shared = app.add_subcommand("shared", "weight-shared ResNets for piecewise constant rhs");
    add_common(shared, shared_flags);
    auto* compile = app.add_subcommand("compile", "compile a PWL function into a ReLU network");
    add_common(compile, compile_flags);
    compile->add_option("--input", cf.input, "PWL function JSON file");
    compile->add_option("--function", cf.function, "sin | cos | tanh | poly");
    compile->add_option("--coefficients", cf.coefficients, "polynomial coefficients, constant term first")
        ->delimiter(',');
    compile->add_option("--dim", cf.dim, "input dimension for --function");
    compile->add_option("--radius", cf.radius, "cube radius for --function");
    compile->add_option("--delta", cf.delta, "grid fineness for --function");
    compile->add_option("--samples", cf.samples, "verification sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*conv)
            return cmd_convergence(conv_flags);
        if (*cplx)
            return cmd_complexity(cplx_flags);
        if (*shared)
            return cmd_shared(shared_flags);
        return cmd_compile(compile_flags, cf);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return config_error;
    } catch (const OracleFailure& e) {
        std::cerr << "oracle failure: " << e.what() << '\n';
        return oracle_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
