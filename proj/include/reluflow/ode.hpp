#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reluflow/network.hpp"

namespace reluflow {

using RhsFunction = std::function<Vector(double, const Vector&)>;

/// Right-hand side f(t, x) of dx/dt = f(t, x) on [0, 1] together with the
/// caller-declared bound |f| <= bound_c and spatial Lipschitz constant.
struct RhsSpec {
    RhsFunction f;
    std::size_t dim = 1;
    double bound_c = 0.0;
    double lipschitz_L = 0.0;
    std::optional<double> time_lipschitz;
    /// f is constant in t on each [i/n, (i+1)/n).
    std::optional<std::size_t> piecewise_constant_pieces;

    Vector operator()(double t, const Vector& x) const { return f(t, x); }
};

/// Index i of the interval [i/n, (i+1)/n) containing t, consistent with the
/// node values double(i) / n; t = 1 maps to the last interval.
std::size_t piece_index(double t, std::size_t n);

/// Samples f at the left end of each of `pieces` equal time intervals.
RhsSpec piecewise_constant(const RhsSpec& rhs, std::size_t pieces);

/// Piecewise linear path through (times[i], states[i]).
class Trajectory {
public:
    Trajectory(std::vector<double> times, std::vector<Vector> states);

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vector>& states() const { return states_; }
    Vector operator()(double t) const;
    double max_norm() const;

private:
    std::vector<double> times_;
    std::vector<Vector> states_;
};

/// t_i = double(i) / n.
std::vector<double> uniform_partition(std::size_t n);

Trajectory euler_solve(const RhsSpec& rhs, const Vector& y0, const std::vector<double>& partition);

class OracleFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Classical RK4 on uniform meshes, doubling the step count until successive
/// solutions agree to tol / 10 on the coarser mesh. Mesh sizes are multiples
/// of 64 (and of the piece count for piecewise-constant rhs), so t = j / 32
/// is always a mesh node.
Trajectory reference_solve(const RhsSpec& rhs, const Vector& y0, double tol);

double gronwall_constant(double beta_l1);
double solution_map_bound(double init_gap, double rhs_gap_l1, double lipschitz_l1);
double perturbed_euler_bound(double eps, double c, std::size_t n, double lipschitz_l1);
double growth_bound(double y0_norm, double c);

/// Samples `samples` random (t, x, y) triples in [0,1] x [-radius, radius]^d
/// and returns a description of every violated declaration.
std::vector<std::string> audit_rhs(const RhsSpec& rhs, double radius, std::size_t samples = 1000,
                                   std::uint64_t seed = 0);

/// Export as CSV with header t,x1,...,xd.
std::string trajectory_to_csv(const Trajectory& traj);

} // namespace reluflow
