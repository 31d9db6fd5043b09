#include "reluflow/resnet.hpp"

#include <limits>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "reluflow/json_io.hpp"
#include "reluflow/parallel.hpp"
#include "reluflow/pwl.hpp"

namespace reluflow {

ResNetParams::ResNetParams(std::size_t dim, std::vector<NetworkParams> pool, std::vector<std::size_t> block_refs)
    : dim_(dim), pool_(std::move(pool)), refs_(std::move(block_refs))
{
    if (dim_ == 0)
        throw std::invalid_argument("ResNetParams: dimension must be positive");
    if (refs_.empty())
        throw std::invalid_argument("ResNetParams: at least one block is required");
    for (std::size_t i = 0; i < pool_.size(); ++i)
        if (pool_[i].input_dim() != dim_ || pool_[i].output_dim() != dim_)
            throw std::invalid_argument("ResNetParams: pool entry " + std::to_string(i)
                                        + " does not map R^d to R^d");
    for (auto r : refs_)
        if (r >= pool_.size())
            throw std::invalid_argument("ResNetParams: block reference " + std::to_string(r) + " out of range");
}

std::size_t ResNetParams::distinct_parameter_count() const
{
    return std::set<std::size_t>(refs_.begin(), refs_.end()).size();
}

ResNetPath::ResNetPath(const ResNetParams& net, const Vector& y) : times_(uniform_partition(net.blocks()))
{
    if (static_cast<std::size_t>(y.size()) != net.dim())
        throw std::invalid_argument("eval_resnet: initial value has dimension " + std::to_string(y.size())
                                    + ", expected " + std::to_string(net.dim()));
    const std::size_t n = net.blocks();
    nodes_.reserve(n + 1);
    increments_.reserve(n);
    nodes_.push_back(y);
    for (std::size_t k = 0; k < n; ++k) {
        const Vector& x = nodes_.back();
        increments_.push_back(eval_network(net.block(k), x));
        nodes_.push_back(x + (times_[k + 1] - times_[k]) * increments_.back());
    }
}

Vector ResNetPath::operator()(double t) const
{
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("eval_resnet: t must lie in [0, 1]");
    const std::size_t k = piece_index(t, increments_.size());
    if (t == times_[k])
        return nodes_[k];
    if (t == 1.0)
        return nodes_.back();
    return nodes_[k] + (t - times_[k]) * increments_[k];
}

Vector eval_resnet(const ResNetParams& net, double t, const Vector& y)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("eval_resnet: t must lie in [0, 1]");
    return ResNetPath(net, y)(t);
}

namespace {

std::vector<NetworkParams> build_blocks(const RhsSpec& rhs, std::size_t count, double r, double accuracy,
                                        std::size_t threads, std::vector<ComplexityReport>& reports)
{
    std::vector<std::optional<NetworkParams>> built(count);
    reports.assign(count, {});
    parallel_for(count, threads, [&](std::size_t k) {
        const double t = static_cast<double>(k) / static_cast<double>(count);
        auto approx = approximate_lipschitz([&](const Vector& x) { return rhs.f(t, x); }, rhs.dim, rhs.lipschitz_L,
                                           rhs.bound_c, r, accuracy);
        reports[k] = approx.report;
        built[k] = std::move(approx.network);
    });
    std::vector<NetworkParams> out;
    out.reserve(count);
    for (auto& b : built)
        out.push_back(std::move(*b));
    return out;
}

} // namespace

BuiltResNet build_resnet(const RhsSpec& rhs, std::size_t n, double r_n, const BuildOptions& options)
{
    if (n == 0)
        throw std::invalid_argument("build_resnet: n must be positive");
    if (!(r_n > 0.0))
        throw std::invalid_argument("build_resnet: r_n must be positive");
    const double accuracy = options.block_accuracy.value_or(1.0 / static_cast<double>(n));
    if (!(accuracy > 0.0))
        throw std::invalid_argument("build_resnet: block accuracy must be positive");

    BuildReport report;
    report.cube_radius = r_n;
    report.block_accuracy = accuracy;
    // |z_i - f(t, x_i)| <= accuracy + L / n on [t_i, t_{i+1})
    report.apriori_bound = perturbed_euler_bound(accuracy + rhs.lipschitz_L / static_cast<double>(n), rhs.bound_c, n,
                                                 rhs.lipschitz_L);

    std::vector<NetworkParams> pool = build_blocks(rhs, n, r_n, accuracy, options.threads, report.blocks);
    std::vector<std::size_t> refs(n);
    for (std::size_t k = 0; k < n; ++k)
        refs[k] = k;
    ResNetParams net(rhs.dim, std::move(pool), std::move(refs));
    net.bound_c = rhs.bound_c;
    net.lipschitz_L = rhs.lipschitz_L;
    return {std::move(net), std::move(report)};
}

BuiltResNet build_shared_resnet(const RhsSpec& rhs, std::size_t k, double r, double block_accuracy,
                                std::size_t threads)
{
    if (!rhs.piecewise_constant_pieces)
        throw std::invalid_argument("build_shared_resnet: rhs is not declared piecewise constant in time");
    if (k == 0)
        throw std::invalid_argument("build_shared_resnet: k must be positive");
    if (!(r > 0.0) || !(block_accuracy > 0.0))
        throw std::invalid_argument("build_shared_resnet: r and block accuracy must be positive");
    const std::size_t pieces = *rhs.piecewise_constant_pieces;

    BuildReport report;
    report.cube_radius = r;
    report.block_accuracy = block_accuracy;
    report.apriori_bound = perturbed_euler_bound(block_accuracy, rhs.bound_c, k * pieces, rhs.lipschitz_L);

    std::vector<ComplexityReport> piece_reports;
    std::vector<NetworkParams> pool = build_blocks(rhs, pieces, r, block_accuracy, threads, piece_reports);
    std::vector<std::size_t> refs;
    refs.reserve(k * pieces);
    for (std::size_t i = 0; i < pieces; ++i)
        for (std::size_t rep = 0; rep < k; ++rep) {
            refs.push_back(i);
            report.blocks.push_back(piece_reports[i]);
        }
    ResNetParams net(rhs.dim, std::move(pool), std::move(refs));
    net.bound_c = rhs.bound_c;
    net.lipschitz_L = rhs.lipschitz_L;
    return {std::move(net), std::move(report)};
}

RhsSpec resnet_as_rhs(const ResNetParams& net)
{
    RhsSpec rhs;
    rhs.dim = net.dim();
    rhs.bound_c = net.bound_c.value_or(std::numeric_limits<double>::infinity());
    rhs.lipschitz_L = net.lipschitz_L.value_or(std::numeric_limits<double>::infinity());
    rhs.piecewise_constant_pieces = net.blocks();
    rhs.f = [net](double t, const Vector& x) { return eval_network(net.block(piece_index(t, net.blocks())), x); };
    return rhs;
}

std::string resnet_to_json(const ResNetParams& net)
{
    nlohmann::json j;
    j["n"] = net.blocks();
    j["dim"] = net.dim();
    auto& pool = j["pool"] = nlohmann::json::array();
    for (const auto& p : net.pool()) {
        nlohmann::json jp;
        to_json(jp, p);
        pool.push_back(std::move(jp));
    }
    j["block_refs"] = net.block_refs();
    return j.dump();
}

ResNetParams resnet_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        std::vector<NetworkParams> pool;
        for (const auto& jp : j.at("pool"))
            pool.push_back(network_params_from_json(jp));
        auto refs = j.at("block_refs").get<std::vector<std::size_t>>();
        if (refs.size() != j.at("n").get<std::size_t>())
            throw std::invalid_argument("ResNet JSON: 'n' differs from the number of block references");
        return ResNetParams(j.at("dim").get<std::size_t>(), std::move(pool), std::move(refs));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("ResNet JSON: ") + e.what());
    }
}

} // namespace reluflow
