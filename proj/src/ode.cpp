#include "reluflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "reluflow/format.hpp"

namespace reluflow {

namespace {

void require_non_negative(double v, const char* name)
{
    if (!(v >= 0.0))
        throw std::invalid_argument(std::string(name) + " must be non-negative");
}

Vector eval_checked(const RhsSpec& rhs, double t, const Vector& x)
{
    Vector y = rhs.f(t, x);
    if (static_cast<std::size_t>(y.size()) != rhs.dim)
        throw std::invalid_argument("rhs returned a vector of dimension " + std::to_string(y.size())
                                    + ", expected " + std::to_string(rhs.dim));
    return y;
}

// Uniform RK4 with `steps` steps. Piecewise-constant rhs are sampled at the
// step start so that no stage crosses a jump (steps is a multiple of pieces).
std::vector<Vector> rk4_nodes(const RhsSpec& rhs, const Vector& y0, std::size_t steps)
{
    const bool frozen_time = rhs.piecewise_constant_pieces.has_value();
    std::vector<Vector> nodes;
    nodes.reserve(steps + 1);
    nodes.push_back(y0);
    Vector x = y0;
    const double n = static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t0 = static_cast<double>(i) / n;
        const double t1 = static_cast<double>(i + 1) / n;
        const double h = t1 - t0;
        const double tm = frozen_time ? t0 : t0 + 0.5 * h;
        const double te = frozen_time ? t0 : t1;
        const Vector k1 = eval_checked(rhs, t0, x);
        const Vector k2 = eval_checked(rhs, tm, x + 0.5 * h * k1);
        const Vector k3 = eval_checked(rhs, tm, x + 0.5 * h * k2);
        const Vector k4 = eval_checked(rhs, te, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw OracleFailure("reference_solve: non-finite state at t = " + format_double(t1));
        nodes.push_back(x);
    }
    return nodes;
}

} // namespace

std::size_t piece_index(double t, std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("piece_index: piece count must be positive");
    const double dn = static_cast<double>(n);
    double fl = std::floor(t * dn);
    std::size_t i = fl <= 0.0 ? 0 : std::min(n - 1, static_cast<std::size_t>(fl));
    while (i + 1 < n && t >= static_cast<double>(i + 1) / dn)
        ++i;
    while (i > 0 && t < static_cast<double>(i) / dn)
        --i;
    return i;
}

RhsSpec piecewise_constant(const RhsSpec& rhs, std::size_t pieces)
{
    if (pieces == 0)
        throw std::invalid_argument("piecewise_constant: piece count must be positive");
    RhsSpec out = rhs;
    out.f = [f = rhs.f, pieces](double t, const Vector& x) {
        return f(static_cast<double>(piece_index(t, pieces)) / static_cast<double>(pieces), x);
    };
    out.time_lipschitz.reset();
    out.piecewise_constant_pieces = pieces;
    return out;
}

Trajectory::Trajectory(std::vector<double> times, std::vector<Vector> states)
    : times_(std::move(times)), states_(std::move(states))
{
    if (times_.empty() || times_.size() != states_.size())
        throw std::invalid_argument("Trajectory: times and states must be non-empty and of equal length");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("Trajectory: times must be strictly increasing");
    for (const auto& s : states_)
        if (!s.allFinite())
            throw std::invalid_argument("Trajectory: non-finite state");
}

Vector Trajectory::operator()(double t) const
{
    if (t <= times_.front())
        return states_.front();
    if (t >= times_.back())
        return states_.back();
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin()) - 1;
    if (t == times_[i])
        return states_[i];
    const double a = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return states_[i] + a * (states_[i + 1] - states_[i]);
}

double Trajectory::max_norm() const
{
    double m = 0.0;
    for (const auto& s : states_)
        m = std::max(m, s.norm());
    return m;
}

std::vector<double> uniform_partition(std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("uniform_partition: n must be positive");
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        t[i] = static_cast<double>(i) / static_cast<double>(n);
    return t;
}

Trajectory euler_solve(const RhsSpec& rhs, const Vector& y0, const std::vector<double>& partition)
{
    if (partition.size() < 2 || partition.front() != 0.0 || partition.back() != 1.0)
        throw std::invalid_argument("euler_solve: partition must start at 0 and end at 1");
    for (std::size_t i = 1; i < partition.size(); ++i)
        if (!(partition[i] > partition[i - 1]))
            throw std::invalid_argument("euler_solve: partition must be strictly increasing");
    if (static_cast<std::size_t>(y0.size()) != rhs.dim)
        throw std::invalid_argument("euler_solve: initial value has the wrong dimension");

    std::vector<Vector> states;
    states.reserve(partition.size());
    states.push_back(y0);
    for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
        const Vector& x = states.back();
        states.push_back(x + (partition[i + 1] - partition[i]) * eval_checked(rhs, partition[i], x));
    }
    return Trajectory(partition, std::move(states));
}

Trajectory reference_solve(const RhsSpec& rhs, const Vector& y0, double tol)
{
    if (!(tol > 0.0))
        throw std::invalid_argument("reference_solve: tol must be positive");
    if (static_cast<std::size_t>(y0.size()) != rhs.dim)
        throw std::invalid_argument("reference_solve: initial value has the wrong dimension");

    std::size_t steps = 64;
    if (rhs.piecewise_constant_pieces)
        steps = std::lcm(steps, *rhs.piecewise_constant_pieces);

    std::vector<Vector> coarse = rk4_nodes(rhs, y0, steps);
    double gap = 0.0;
    for (int halving = 0; halving < 20; ++halving) {
        std::vector<Vector> fine = rk4_nodes(rhs, y0, 2 * steps);
        gap = 0.0;
        for (std::size_t i = 0; i <= steps; ++i)
            gap = std::max(gap, (fine[2 * i] - coarse[i]).norm());
        steps *= 2;
        if (gap < tol / 10.0)
            return Trajectory(uniform_partition(steps), std::move(fine));
        coarse = std::move(fine);
    }
    throw OracleFailure("reference_solve: no convergence after 20 step halvings (last gap " + format_double(gap)
                        + "); the rhs may be non-smooth or mis-declared");
}

double gronwall_constant(double beta_l1)
{
    require_non_negative(beta_l1, "gronwall_constant: beta");
    return 1.0 + beta_l1 * std::exp(beta_l1);
}

double solution_map_bound(double init_gap, double rhs_gap_l1, double lipschitz_l1)
{
    require_non_negative(init_gap, "solution_map_bound: initial gap");
    require_non_negative(rhs_gap_l1, "solution_map_bound: rhs gap");
    return gronwall_constant(lipschitz_l1) * (init_gap + rhs_gap_l1);
}

double perturbed_euler_bound(double eps, double c, std::size_t n, double lipschitz_l1)
{
    require_non_negative(eps, "perturbed_euler_bound: eps");
    require_non_negative(c, "perturbed_euler_bound: c");
    if (n == 0)
        throw std::invalid_argument("perturbed_euler_bound: n must be positive");
    return gronwall_constant(lipschitz_l1) * (eps + c / static_cast<double>(n) * lipschitz_l1);
}

double growth_bound(double y0_norm, double c)
{
    return y0_norm + c;
}

std::vector<std::string> audit_rhs(const RhsSpec& rhs, double radius, std::size_t samples, std::uint64_t seed)
{
    std::vector<std::string> problems;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, 1.0), space(-radius, radius);
    const auto d = static_cast<Eigen::Index>(rhs.dim);
    double worst_bound = 0.0, worst_lip = 0.0, worst_time = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = time(rng), u = time(rng);
        Vector x(d), y(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            x[i] = space(rng);
            y[i] = space(rng);
        }
        const Vector fx = eval_checked(rhs, t, x);
        worst_bound = std::max(worst_bound, fx.norm());
        const double dx = (x - y).norm();
        if (dx > 0.0)
            worst_lip = std::max(worst_lip, (fx - eval_checked(rhs, t, y)).norm() / dx);
        if (rhs.time_lipschitz && t != u)
            worst_time = std::max(worst_time, (fx - eval_checked(rhs, u, x)).norm() / std::abs(t - u));
    }
    const double slack = 1.0 + 1e-9;
    if (worst_bound > rhs.bound_c * slack + 1e-12)
        problems.push_back("sampled |f| = " + format_double(worst_bound) + " exceeds bound_c = "
                           + format_double(rhs.bound_c));
    if (worst_lip > rhs.lipschitz_L * slack + 1e-12)
        problems.push_back("sampled spatial Lipschitz ratio " + format_double(worst_lip) + " exceeds L = "
                           + format_double(rhs.lipschitz_L));
    if (rhs.time_lipschitz && worst_time > *rhs.time_lipschitz * slack + 1e-12)
        problems.push_back("sampled temporal Lipschitz ratio " + format_double(worst_time)
                           + " exceeds the declared constant " + format_double(*rhs.time_lipschitz));
    return problems;
}

std::string trajectory_to_csv(const Trajectory& traj)
{
    std::ostringstream out;
    out << 't';
    const auto d = traj.states().front().size();
    for (Eigen::Index i = 0; i < d; ++i)
        out << ",x" << (i + 1);
    out << '\n';
    for (std::size_t k = 0; k < traj.times().size(); ++k) {
        out << format_double(traj.times()[k]);
        for (Eigen::Index i = 0; i < d; ++i)
            out << ',' << format_double(traj.states()[k][i]);
        out << '\n';
    }
    return out.str();
}

} // namespace reluflow
