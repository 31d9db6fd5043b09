#include "reluflow/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "reluflow/format.hpp"
#include "reluflow/parallel.hpp"
#include "reluflow/resnet.hpp"

namespace reluflow {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("config: '" + key + "' expects a real number, got '" + v + "'");
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v)
{
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<std::size_t>(parse_uint(key, trim(item))));
    return out;
}

ConvergenceRow convergence_row(std::size_t n, double sup_error, const BuildReport& report)
{
    ConvergenceRow row;
    row.n = n;
    row.sup_error = sup_error;
    row.apriori_bound = report.apriori_bound;
    for (const auto& b : report.blocks) {
        row.block_neurons = std::max(row.block_neurons, b.neurons);
        row.block_depth = std::max(row.block_depth, b.depth);
        row.free_weights = std::max(row.free_weights, b.free_weights);
    }
    return row;
}

struct ReferenceSamples {
    std::vector<Vector> points;
    std::vector<double> times;
    // values[p][j] = x(times[j], points[p])
    std::vector<std::vector<Vector>> values;
    double growth_excess = -std::numeric_limits<double>::infinity();
};

ReferenceSamples sample_reference(const ExperimentConfig& config, const RhsSpec& rhs)
{
    ReferenceSamples s;
    s.points = test_points(config);
    s.times = test_times(config);
    s.values.resize(s.points.size());
    std::vector<double> excess(s.points.size());
    parallel_for(s.points.size(), config.threads, [&](std::size_t p) {
        const Trajectory ref = reference_solve(rhs, s.points[p], config.oracle_tol);
        s.values[p].reserve(s.times.size());
        for (double t : s.times)
            s.values[p].push_back(ref(t));
        excess[p] = ref.max_norm() - growth_bound(s.points[p].norm(), rhs.bound_c);
    });
    for (double e : excess)
        s.growth_excess = std::max(s.growth_excess, e);
    return s;
}

struct ResNetError {
    double sup_error = 0.0;
    double growth_excess = -std::numeric_limits<double>::infinity();
};

ResNetError measure(const ResNetParams& net, const ReferenceSamples& ref, double bound_c, std::size_t threads)
{
    std::vector<double> errors(ref.points.size()), excess(ref.points.size());
    parallel_for(ref.points.size(), threads, [&](std::size_t p) {
        const ResNetPath path(net, ref.points[p]);
        double e = 0.0;
        for (std::size_t j = 0; j < ref.times.size(); ++j)
            e = std::max(e, (path(ref.times[j]) - ref.values[p][j]).norm());
        errors[p] = e;
        double m = 0.0;
        for (const auto& x : path.nodes())
            m = std::max(m, x.norm());
        excess[p] = m - growth_bound(ref.points[p].norm(), bound_c);
    });
    ResNetError out;
    for (std::size_t p = 0; p < errors.size(); ++p) {
        out.sup_error = std::max(out.sup_error, errors[p]);
        out.growth_excess = std::max(out.growth_excess, excess[p]);
    }
    return out;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (dim == 0)
        throw ConfigError("config: dim must be positive");
    if (!(k_radius >= 0.0))
        throw ConfigError("config: k_radius must be non-negative");
    if (time_samples < 2 || space_samples < 2)
        throw ConfigError("config: sample counts must be at least 2");
    auto ascending = [](const std::vector<std::size_t>& v) {
        if (v.empty() || v.front() == 0)
            return false;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] <= v[i - 1])
                return false;
        return true;
    };
    if (!ascending(n_list))
        throw ConfigError("config: n_list must be a non-empty ascending list of positive integers");
    if (!ascending(k_list))
        throw ConfigError("config: k_list must be a non-empty ascending list of positive integers");
    if (r_base && !(*r_base > 0.0))
        throw ConfigError("config: r_base must be positive");
    if (block_eps && !(*block_eps > 0.0))
        throw ConfigError("config: block_eps must be positive");
    if (!(oracle_tol > 0.0))
        throw ConfigError("config: oracle_tol must be positive");
    if (threads == 0)
        throw ConfigError("config: threads must be positive");
    try {
        make_rhs(rhs, dim, rhs_value);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "rhs")
            c.rhs = value;
        else if (key == "rhs_value")
            c.rhs_value = parse_real(key, value);
        else if (key == "rhs_pieces")
            c.rhs_pieces = parse_uint(key, value);
        else if (key == "dim")
            c.dim = parse_uint(key, value);
        else if (key == "k_radius")
            c.k_radius = parse_real(key, value);
        else if (key == "time_samples")
            c.time_samples = parse_uint(key, value);
        else if (key == "space_samples")
            c.space_samples = parse_uint(key, value);
        else if (key == "n_list")
            c.n_list = parse_list(key, value);
        else if (key == "k_list")
            c.k_list = parse_list(key, value);
        else if (key == "r_rule") {
            if (value == "fixed")
                c.r_rule = RadiusRule::fixed;
            else if (value == "log")
                c.r_rule = RadiusRule::log;
            else if (value == "sqrt")
                c.r_rule = RadiusRule::sqrt;
            else
                throw ConfigError("config: r_rule must be fixed, log or sqrt");
        } else if (key == "r_base")
            c.r_base = parse_real(key, value);
        else if (key == "block_eps")
            c.block_eps = parse_real(key, value);
        else if (key == "oracle_tol")
            c.oracle_tol = parse_real(key, value);
        else if (key == "seed")
            c.seed = parse_uint(key, value);
        else if (key == "threads")
            c.threads = parse_uint(key, value);
        else if (key == "out")
            c.out = value;
        else
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

RhsSpec make_rhs(const std::string& name, std::size_t dim, double value)
{
    if (dim == 0)
        throw std::invalid_argument("make_rhs: dimension must be positive");
    const double sqrt_d = std::sqrt(static_cast<double>(dim));
    const auto d = static_cast<Eigen::Index>(dim);
    RhsSpec rhs;
    rhs.dim = dim;
    rhs.time_lipschitz = 0.0;
    if (name == "zero") {
        rhs.f = [d](double, const Vector&) { return Vector::Zero(d); };
    } else if (name == "sin") {
        rhs.f = [](double, const Vector& x) -> Vector { return x.array().sin(); };
        rhs.bound_c = sqrt_d;
        rhs.lipschitz_L = 1.0;
    } else if (name == "tanh") {
        rhs.f = [](double, const Vector& x) -> Vector { return x.array().tanh(); };
        rhs.bound_c = sqrt_d;
        rhs.lipschitz_L = 1.0;
    } else if (name == "sin_time") {
        rhs.f = [](double t, const Vector& x) -> Vector { return std::cos(t) * x.array().sin(); };
        rhs.bound_c = sqrt_d;
        rhs.lipschitz_L = 1.0;
        rhs.time_lipschitz = sqrt_d;
    } else if (name == "const") {
        rhs.f = [d, value](double, const Vector&) { return Vector::Constant(d, value); };
        rhs.bound_c = std::abs(value) * sqrt_d;
    } else {
        throw std::invalid_argument("unknown rhs '" + name + "' (expected zero, sin, tanh, sin_time or const)");
    }
    return rhs;
}

RhsSpec make_rhs(const ExperimentConfig& config)
{
    RhsSpec rhs = make_rhs(config.rhs, config.dim, config.rhs_value);
    if (config.rhs_pieces > 0)
        rhs = piecewise_constant(rhs, config.rhs_pieces);
    return rhs;
}

double base_radius(const ExperimentConfig& config, const RhsSpec& rhs)
{
    if (config.r_base)
        return *config.r_base;
    return std::max(4.0, std::sqrt(static_cast<double>(config.dim)) * config.k_radius + rhs.bound_c + 1.0);
}

double radius_for(const ExperimentConfig& config, const RhsSpec& rhs, std::size_t n)
{
    const double base = base_radius(config, rhs);
    switch (config.r_rule) {
    case RadiusRule::log:
        return base + std::log(static_cast<double>(n));
    case RadiusRule::sqrt:
        return base + std::sqrt(static_cast<double>(n));
    case RadiusRule::fixed:
        break;
    }
    return base;
}

std::vector<Vector> test_points(const ExperimentConfig& config)
{
    const std::size_t d = config.dim, s = config.space_samples;
    std::size_t total = 1;
    for (std::size_t i = 0; i < d; ++i)
        total *= s;
    std::vector<Vector> points;
    points.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Vector y(static_cast<Eigen::Index>(d));
        std::size_t rest = idx;
        for (std::size_t i = d; i-- > 0;) {
            const auto j = rest % s;
            rest /= s;
            y[static_cast<Eigen::Index>(i)]
                = -config.k_radius + 2.0 * config.k_radius * static_cast<double>(j) / static_cast<double>(s - 1);
        }
        points.push_back(std::move(y));
    }
    return points;
}

std::vector<double> test_times(const ExperimentConfig& config)
{
    return uniform_partition(config.time_samples - 1);
}

double fit_log_slope(const std::vector<double>& n, const std::vector<double>& error)
{
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n.size() && i < error.size(); ++i)
        if (error[i] > 0.0 && n[i] > 0.0) {
            xs.push_back(std::log(n[i]));
            ys.push_back(std::log(error[i]));
        }
    if (xs.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    const double k = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / k, my = sy / k;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

ErrorReport run_convergence(const ExperimentConfig& config)
{
    config.validate();
    const RhsSpec rhs = make_rhs(config);
    const ReferenceSamples ref = sample_reference(config, rhs);

    ErrorReport report;
    report.r_base = base_radius(config, rhs);
    report.growth_excess = ref.growth_excess;
    std::vector<double> ns, errs;
    for (std::size_t n : config.n_list) {
        BuildOptions options;
        options.block_accuracy = config.block_eps;
        options.threads = config.threads;
        const auto built = build_resnet(rhs, n, radius_for(config, rhs, n), options);
        const auto err = measure(built.net, ref, rhs.bound_c, config.threads);
        report.growth_excess = std::max(report.growth_excess, err.growth_excess);
        report.rows.push_back(convergence_row(n, err.sup_error, built.report));
        ns.push_back(static_cast<double>(n));
        errs.push_back(err.sup_error);
    }
    report.slope = fit_log_slope(ns, errs);
    return report;
}

std::string convergence_csv(const ErrorReport& report)
{
    std::ostringstream out;
    out << "n,sup_error,apriori_bound,block_neurons,block_depth,free_weights\n";
    for (const auto& r : report.rows)
        out << r.n << ',' << format_double(r.sup_error) << ',' << format_double(r.apriori_bound) << ','
            << r.block_neurons << ',' << r.block_depth << ',' << r.free_weights << '\n';
    return out.str();
}

std::string convergence_summary_json(const ExperimentConfig& config, const ErrorReport& report)
{
    nlohmann::json j;
    j["rhs"] = config.rhs;
    j["dim"] = config.dim;
    j["seed"] = config.seed;
    j["r_base"] = report.r_base;
    j["slope"] = report.slope;
    j["growth_excess"] = report.growth_excess;
    bool dominated = true;
    for (const auto& r : report.rows)
        dominated = dominated && r.sup_error <= r.apriori_bound;
    j["bound_dominates"] = dominated;
    return j.dump(2) + "\n";
}

ComplexityTable run_complexity(const ExperimentConfig& config)
{
    config.validate();
    const RhsSpec rhs = make_rhs(config);
    ComplexityTable table;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t n : config.n_list) {
        const double r_n = radius_for(config, rhs, n);
        BuildOptions options;
        options.block_accuracy = config.block_eps;
        options.threads = config.threads;
        const auto built = build_resnet(rhs, n, r_n, options);
        const auto conv = convergence_row(n, 0.0, built.report);
        ComplexityRow row;
        row.n = n;
        row.r_n = r_n;
        row.neurons = conv.block_neurons;
        row.depth = conv.block_depth;
        row.free_weights = conv.free_weights;
        const double scale = std::pow(r_n * static_cast<double>(n), static_cast<double>(config.dim));
        row.bound_const = static_cast<double>(row.neurons) / scale;
        lo = std::min(lo, row.bound_const);
        hi = std::max(hi, row.bound_const);
        table.rows.push_back(row);
    }
    table.bound_ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    return table;
}

std::string complexity_csv(const ComplexityTable& table)
{
    std::ostringstream out;
    out << "n,r_n,neurons,depth,free_weights,bound_const\n";
    for (const auto& r : table.rows)
        out << r.n << ',' << format_double(r.r_n) << ',' << r.neurons << ',' << r.depth << ',' << r.free_weights
            << ',' << format_double(r.bound_const) << '\n';
    return out.str();
}

std::vector<SharedRow> run_shared(const ExperimentConfig& config)
{
    config.validate();
    RhsSpec rhs = make_rhs(config.rhs, config.dim, config.rhs_value);
    rhs = piecewise_constant(rhs, std::max<std::size_t>(1, config.rhs_pieces));
    const ReferenceSamples ref = sample_reference(config, rhs);
    const double r = base_radius(config, rhs);
    const double eps = config.block_eps.value_or(0.01);

    std::vector<SharedRow> rows;
    for (std::size_t k : config.k_list) {
        const auto built = build_shared_resnet(rhs, k, r, eps, config.threads);
        const auto err = measure(built.net, ref, rhs.bound_c, config.threads);
        rows.push_back({k, built.net.blocks(), built.net.distinct_parameter_count(), err.sup_error});
    }
    return rows;
}

std::string shared_csv(const std::vector<SharedRow>& rows)
{
    std::ostringstream out;
    out << "k,blocks,distinct_params,sup_error\n";
    for (const auto& r : rows)
        out << r.k << ',' << r.blocks << ',' << r.distinct_params << ',' << format_double(r.sup_error) << '\n';
    return out.str();
}

CompileResult compile_and_verify(const PWLFunction& f, std::size_t samples, std::uint64_t seed)
{
    NetworkParams net = compile_pwl(f);
    const auto d = static_cast<Eigen::Index>(f.input_dim());
    const double span = f.cube_radius() + 1.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-span, span);
    Matrix xs(d, static_cast<Eigen::Index>(samples));
    for (Eigen::Index c = 0; c < xs.cols(); ++c)
        for (Eigen::Index i = 0; i < d; ++i)
            xs(i, c) = coord(rng);
    const Matrix ys = eval_network_batch(net, xs);
    double dev = 0.0;
    for (Eigen::Index c = 0; c < xs.cols(); ++c)
        dev = std::max(dev, (ys.col(c) - eval_pwl(f, xs.col(c))).cwiseAbs().maxCoeff());

    CompileResult out{std::move(net), {}, dev, 1e-9 * (1.0 + f.max_value_norm()), false};
    out.report = complexity(out.network);
    out.passed = dev <= out.tolerance;
    return out;
}

ScalarField make_function(const std::string& name, const std::vector<double>& coefficients)
{
    if (name == "sin")
        return [](const Vector& x) { return Vector::Constant(1, x.array().sin().sum()); };
    if (name == "cos")
        return [](const Vector& x) { return Vector::Constant(1, x.array().cos().sum()); };
    if (name == "tanh")
        return [](const Vector& x) { return Vector::Constant(1, x.array().tanh().sum()); };
    if (name == "poly") {
        if (coefficients.empty())
            throw std::invalid_argument("make_function: poly needs at least one coefficient");
        return [coefficients](const Vector& x) {
            double total = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                double p = 0.0;
                for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
                    p = p * x[i] + *it;
                total += p;
            }
            return Vector::Constant(1, total);
        };
    }
    throw std::invalid_argument("unknown function '" + name + "' (expected sin, cos, tanh or poly)");
}

} // namespace reluflow
