#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "reluflow/network.hpp"
#include "reluflow/ode.hpp"

namespace reluflow {

/// Residual network read as a space-time map:
///   x(0, y) = y,  x(t_{k+1}) = x(t_k) + (t_{k+1} - t_k) R_{k+1}(x(t_k)),  t_k = k / n,
/// linear in t in between. Blocks reference a parameter pool, so repeated
/// references share parameters.
class ResNetParams {
public:
    ResNetParams(std::size_t dim, std::vector<NetworkParams> pool, std::vector<std::size_t> block_refs);

    std::size_t dim() const { return dim_; }
    std::size_t blocks() const { return refs_.size(); }
    const std::vector<NetworkParams>& pool() const { return pool_; }
    const std::vector<std::size_t>& block_refs() const { return refs_; }
    const NetworkParams& block(std::size_t k) const { return pool_[refs_[k]]; }
    /// Number of parameter sets actually referenced by some block.
    std::size_t distinct_parameter_count() const;

    /// Bound on |R_k| and common Lipschitz constant of the blocks, when known
    /// from the construction.
    std::optional<double> bound_c;
    std::optional<double> lipschitz_L;

private:
    std::size_t dim_;
    std::vector<NetworkParams> pool_;
    std::vector<std::size_t> refs_;
};

/// Node states and block increments for one initial value; evaluates the
/// space-time map at any t in O(1) after O(n) setup.
class ResNetPath {
public:
    ResNetPath(const ResNetParams& net, const Vector& y);

    const std::vector<Vector>& nodes() const { return nodes_; }
    Vector operator()(double t) const;

private:
    std::vector<double> times_;
    std::vector<Vector> nodes_;
    std::vector<Vector> increments_;
};

Vector eval_resnet(const ResNetParams& net, double t, const Vector& y);

struct BuildReport {
    std::vector<ComplexityReport> blocks;
    double cube_radius = 0.0;
    double block_accuracy = 0.0;
    double apriori_bound = 0.0;
};

struct BuildOptions {
    /// Per-block sup-norm accuracy; defaults to 1/n.
    std::optional<double> block_accuracy;
    std::size_t threads = 1;
};

struct BuiltResNet {
    ResNetParams net;
    BuildReport report;
};

/// n blocks, block k+1 interpolating f(k/n, .) on [-r_n, r_n]^d.
BuiltResNet build_resnet(const RhsSpec& rhs, std::size_t n, double r_n, const BuildOptions& options = {});

/// For rhs constant on [i/p, (i+1)/p): p parameter sets, each repeated k times.
BuiltResNet build_shared_resnet(const RhsSpec& rhs, std::size_t k, double r, double block_accuracy,
                                std::size_t threads = 1);

/// The piecewise-constant rhs whose Euler scheme on the uniform block
/// partition is this ResNet.
RhsSpec resnet_as_rhs(const ResNetParams& net);

std::string resnet_to_json(const ResNetParams& net);
ResNetParams resnet_from_json(const std::string& text);

} // namespace reluflow
