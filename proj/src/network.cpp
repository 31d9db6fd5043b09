#include "reluflow/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "reluflow/json_io.hpp"

namespace reluflow {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(std::size_t rows, std::size_t cols, const std::vector<Triplet>& triplets)
{
    SparseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

void append_block(std::vector<Triplet>& out, const SparseMatrix& block, Eigen::Index row0, Eigen::Index col0,
                  double scale = 1.0)
{
    for (Eigen::Index r = 0; r < block.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(block, r); it; ++it)
            out.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
}

SparseMatrix identity_sparse(std::size_t d)
{
    SparseMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    m.setIdentity();
    m.makeCompressed();
    return m;
}

// [I; -I]
AffineMap split_layer(std::size_t d)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d; ++i) {
        t.emplace_back(i, i, 1.0);
        t.emplace_back(d + i, i, -1.0);
    }
    return AffineMap(from_triplets(2 * d, d, t), Vector::Zero(static_cast<Eigen::Index>(2 * d)));
}

// [I, sign*I]
AffineMap join_layer(std::size_t d, double sign)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < d; ++i) {
        t.emplace_back(i, i, 1.0);
        t.emplace_back(i, d + i, sign);
    }
    return AffineMap(from_triplets(d, 2 * d, t), Vector::Zero(static_cast<Eigen::Index>(d)));
}

// Pairwise min layer R^{2p} -> R^p as a shallow network: hidden width 4p.
NetworkParams pairwise_min_network(std::size_t pairs)
{
    std::vector<Triplet> hidden, out;
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto a = 2 * p, b = 2 * p + 1, h = 4 * p;
        // rho(x+y), rho(-x-y), rho(x-y), rho(-x+y)
        hidden.emplace_back(h + 0, a, 1.0);
        hidden.emplace_back(h + 0, b, 1.0);
        hidden.emplace_back(h + 1, a, -1.0);
        hidden.emplace_back(h + 1, b, -1.0);
        hidden.emplace_back(h + 2, a, 1.0);
        hidden.emplace_back(h + 2, b, -1.0);
        hidden.emplace_back(h + 3, a, -1.0);
        hidden.emplace_back(h + 3, b, 1.0);
        out.emplace_back(p, h + 0, 0.5);
        out.emplace_back(p, h + 1, -0.5);
        out.emplace_back(p, h + 2, -0.5);
        out.emplace_back(p, h + 3, -0.5);
    }
    const auto np = static_cast<Eigen::Index>(pairs);
    std::vector<AffineMap> layers;
    layers.emplace_back(from_triplets(4 * pairs, 2 * pairs, hidden), Vector::Zero(4 * np));
    layers.emplace_back(from_triplets(pairs, 4 * pairs, out), Vector::Zero(np));
    return NetworkParams(std::move(layers));
}

} // namespace

AffineMap::AffineMap(SparseMatrix weights, Vector bias)
    : weights_(std::move(weights)), bias_(std::move(bias))
{
    if (weights_.rows() != bias_.size())
        throw std::invalid_argument("AffineMap: weight rows (" + std::to_string(weights_.rows())
                                    + ") differ from bias length (" + std::to_string(bias_.size()) + ")");
    if (weights_.rows() == 0 || weights_.cols() == 0)
        throw std::invalid_argument("AffineMap: empty dimension");
    weights_.makeCompressed();
    for (Eigen::Index k = 0; k < weights_.nonZeros(); ++k)
        if (!std::isfinite(weights_.valuePtr()[k]))
            throw std::invalid_argument("AffineMap: non-finite weight");
    if (!bias_.allFinite())
        throw std::invalid_argument("AffineMap: non-finite bias");
}

AffineMap::AffineMap(const Matrix& weights, Vector bias)
    : AffineMap(SparseMatrix(weights.sparseView()), std::move(bias))
{
}

Vector AffineMap::apply(const Vector& x) const
{
    Vector y = weights_ * x;
    y += bias_;
    return y;
}

Matrix AffineMap::apply(const Matrix& xs) const
{
    Matrix y = weights_ * xs;
    y.colwise() += bias_;
    return y;
}

NetworkParams::NetworkParams(std::vector<AffineMap> layers, std::vector<bool> free_layers)
    : layers_(std::move(layers)), free_layers_(std::move(free_layers))
{
    if (layers_.empty())
        throw std::invalid_argument("NetworkParams: at least one affine map is required");
    if (free_layers_.empty())
        free_layers_.assign(layers_.size(), false);
    if (free_layers_.size() != layers_.size())
        throw std::invalid_argument("NetworkParams: free-layer mask length differs from depth");
    for (std::size_t l = 1; l < layers_.size(); ++l)
        if (layers_[l].input_dim() != layers_[l - 1].output_dim())
            throw std::invalid_argument("NetworkParams: layer " + std::to_string(l) + " expects input dim "
                                        + std::to_string(layers_[l].input_dim()) + " but layer "
                                        + std::to_string(l - 1) + " outputs "
                                        + std::to_string(layers_[l - 1].output_dim()));
}

Vector eval_network(const NetworkParams& net, const Vector& x)
{
    if (static_cast<std::size_t>(x.size()) != net.input_dim())
        throw std::invalid_argument("eval_network: layer 0 expects input dim " + std::to_string(net.input_dim())
                                    + ", got " + std::to_string(x.size()));
    Vector y = x;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        y = layers[l].apply(y);
        if (l + 1 < layers.size())
            y = y.cwiseMax(0.0);
    }
    return y;
}

Matrix eval_network_batch(const NetworkParams& net, const Matrix& xs)
{
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (static_cast<std::size_t>(xs.rows()) != net.input_dim())
        throw std::invalid_argument("eval_network_batch: layer 0 expects input dim "
                                    + std::to_string(net.input_dim()) + ", got " + std::to_string(xs.rows()));
    // Column chunks bound the size of the hidden activations of wide networks.
    constexpr Eigen::Index chunk = 256;
    const auto& layers = net.layers();
    Matrix out(static_cast<Eigen::Index>(net.output_dim()), xs.cols());
    for (Eigen::Index first = 0; first < xs.cols(); first += chunk) {
        const Eigen::Index count = std::min(chunk, xs.cols() - first);
        // Row-major activations keep the sparse-times-dense product contiguous.
        RowMatrix y = xs.middleCols(first, count);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            RowMatrix next = layers[l].weights() * y;
            next.colwise() += layers[l].bias();
            if (l + 1 < layers.size())
                next = next.cwiseMax(0.0);
            y = std::move(next);
        }
        out.middleCols(first, count) = y;
    }
    return out;
}

NetworkParams identity_network(std::size_t d, std::size_t depth)
{
    if (d == 0)
        throw std::invalid_argument("identity_network: dimension must be positive");
    if (depth < 2)
        throw std::invalid_argument("identity_network: depth must be at least 2");
    std::vector<AffineMap> layers;
    layers.push_back(split_layer(d));
    for (std::size_t l = 2; l < depth; ++l)
        layers.emplace_back(identity_sparse(2 * d), Vector::Zero(static_cast<Eigen::Index>(2 * d)));
    layers.push_back(join_layer(d, -1.0));
    return NetworkParams(std::move(layers));
}

NetworkParams abs_network(std::size_t d, std::size_t depth)
{
    if (d == 0)
        throw std::invalid_argument("abs_network: dimension must be positive");
    if (depth < 2)
        throw std::invalid_argument("abs_network: depth must be at least 2");
    std::vector<AffineMap> layers;
    layers.push_back(split_layer(d));
    for (std::size_t l = 2; l < depth; ++l)
        layers.emplace_back(identity_sparse(2 * d), Vector::Zero(static_cast<Eigen::Index>(2 * d)));
    layers.push_back(join_layer(d, 1.0));
    return NetworkParams(std::move(layers));
}

NetworkParams min2_network()
{
    return pairwise_min_network(1);
}

NetworkParams min_tree_network(std::size_t d)
{
    if (d == 0)
        throw std::invalid_argument("min_tree_network: d must be positive");
    if (d == 1)
        return linear_network(Matrix::Identity(1, 1), Vector::Zero(1));

    const std::size_t padded = std::bit_ceil(d);
    NetworkParams tree = pairwise_min_network(padded / 2);
    for (std::size_t width = padded / 2; width > 1; width /= 2)
        tree = compose_networks(pairwise_min_network(width / 2), tree);
    if (padded == d)
        return tree;

    // Slot i reads input i mod d. Paired slots never alias the same input,
    // so the first-layer weights stay in {0, +-1}.
    std::vector<Triplet> fan;
    for (std::size_t i = 0; i < padded; ++i)
        fan.emplace_back(i, i % d, 1.0);
    const NetworkParams fan_out(
        {AffineMap(from_triplets(padded, d, fan), Vector::Zero(static_cast<Eigen::Index>(padded)))});
    return compose_networks(tree, fan_out);
}

NetworkParams zero_network(std::size_t input_dim, std::size_t output_dim, std::size_t depth)
{
    if (input_dim == 0 || output_dim == 0 || depth == 0)
        throw std::invalid_argument("zero_network: dimensions and depth must be positive");
    std::vector<AffineMap> layers;
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t out = (l + 1 == depth) ? output_dim : 1;
        layers.emplace_back(SparseMatrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                            Vector::Zero(static_cast<Eigen::Index>(out)));
        in = out;
    }
    return NetworkParams(std::move(layers));
}

NetworkParams linear_network(const Matrix& weights, const Vector& bias)
{
    return NetworkParams({AffineMap(weights, bias)});
}

NetworkParams parallelize(const std::vector<NetworkParams>& nets)
{
    if (nets.empty())
        throw std::invalid_argument("parallelize: no networks given");
    const std::size_t depth = nets.front().depth();
    for (const auto& n : nets)
        if (n.depth() != depth)
            throw std::invalid_argument("parallelize: depth mismatch (" + std::to_string(n.depth()) + " vs "
                                        + std::to_string(depth) + "); pad with depth_pad first");

    std::vector<AffineMap> layers;
    std::vector<bool> free(depth, false);
    for (std::size_t l = 0; l < depth; ++l) {
        std::size_t rows = 0, cols = 0, nnz = 0;
        for (const auto& n : nets) {
            rows += n.layers()[l].output_dim();
            cols += n.layers()[l].input_dim();
            nnz += static_cast<std::size_t>(n.layers()[l].weights().nonZeros());
        }
        std::vector<Triplet> t;
        t.reserve(nnz);
        Vector bias(static_cast<Eigen::Index>(rows));
        Eigen::Index r0 = 0, c0 = 0;
        for (const auto& n : nets) {
            const auto& layer = n.layers()[l];
            append_block(t, layer.weights(), r0, c0);
            bias.segment(r0, layer.bias().size()) = layer.bias();
            r0 += static_cast<Eigen::Index>(layer.output_dim());
            c0 += static_cast<Eigen::Index>(layer.input_dim());
            free[l] = free[l] || n.layer_is_free(l);
        }
        layers.emplace_back(from_triplets(rows, cols, t), std::move(bias));
    }
    return NetworkParams(std::move(layers), std::move(free));
}

NetworkParams sum_networks(const std::vector<NetworkParams>& nets, const std::vector<double>& coefficients)
{
    if (nets.empty())
        throw std::invalid_argument("sum_networks: no networks given");
    if (nets.size() != coefficients.size())
        throw std::invalid_argument("sum_networks: coefficient count differs from network count");
    const auto& first = nets.front();
    for (const auto& n : nets) {
        if (n.depth() != first.depth())
            throw std::invalid_argument("sum_networks: depth mismatch (" + std::to_string(n.depth()) + " vs "
                                        + std::to_string(first.depth()) + ")");
        if (n.input_dim() != first.input_dim() || n.output_dim() != first.output_dim())
            throw std::invalid_argument("sum_networks: input/output dimension mismatch");
    }

    const std::size_t depth = first.depth();
    const std::size_t in = first.input_dim();
    const std::size_t out = first.output_dim();
    std::vector<bool> free(depth, false);
    for (const auto& n : nets)
        for (std::size_t l = 0; l < depth; ++l)
            free[l] = free[l] || n.layer_is_free(l);

    if (depth == 1) {
        std::vector<Triplet> t;
        Vector bias = Vector::Zero(static_cast<Eigen::Index>(out));
        for (std::size_t i = 0; i < nets.size(); ++i) {
            append_block(t, nets[i].layers()[0].weights(), 0, 0, coefficients[i]);
            bias += coefficients[i] * nets[i].layers()[0].bias();
        }
        return NetworkParams({AffineMap(from_triplets(out, in, t), std::move(bias))}, std::move(free));
    }

    std::vector<AffineMap> layers;
    for (std::size_t l = 0; l < depth; ++l) {
        const bool is_first = l == 0;
        const bool is_last = l + 1 == depth;
        std::size_t rows = 0, cols = 0;
        for (const auto& n : nets) {
            rows += n.layers()[l].output_dim();
            cols += n.layers()[l].input_dim();
        }
        if (is_first)
            cols = in;
        if (is_last)
            rows = out;

        std::vector<Triplet> t;
        Vector bias = Vector::Zero(static_cast<Eigen::Index>(rows));
        Eigen::Index r0 = 0, c0 = 0;
        for (std::size_t i = 0; i < nets.size(); ++i) {
            const auto& layer = nets[i].layers()[l];
            if (is_last) {
                append_block(t, layer.weights(), 0, c0, coefficients[i]);
                bias += coefficients[i] * layer.bias();
            } else {
                append_block(t, layer.weights(), r0, is_first ? 0 : c0);
                bias.segment(r0, layer.bias().size()) = layer.bias();
            }
            r0 += static_cast<Eigen::Index>(layer.output_dim());
            c0 += static_cast<Eigen::Index>(layer.input_dim());
        }
        layers.emplace_back(from_triplets(rows, cols, t), std::move(bias));
    }
    return NetworkParams(std::move(layers), std::move(free));
}

NetworkParams compose_networks(const NetworkParams& outer, const NetworkParams& inner)
{
    if (inner.output_dim() != outer.input_dim())
        throw std::invalid_argument("compose_networks: inner output dim " + std::to_string(inner.output_dim())
                                    + " differs from outer input dim " + std::to_string(outer.input_dim()));
    std::vector<AffineMap> layers;
    std::vector<bool> free;
    for (std::size_t l = 0; l + 1 < inner.depth(); ++l) {
        layers.push_back(inner.layers()[l]);
        free.push_back(inner.layer_is_free(l));
    }
    const auto& a = inner.layers().back();
    const auto& b = outer.layers().front();
    SparseMatrix merged = (b.weights() * a.weights()).pruned();
    Vector bias = b.weights() * a.bias() + b.bias();
    layers.emplace_back(std::move(merged), std::move(bias));
    free.push_back(inner.layer_is_free(inner.depth() - 1) || outer.layer_is_free(0));
    for (std::size_t l = 1; l < outer.depth(); ++l) {
        layers.push_back(outer.layers()[l]);
        free.push_back(outer.layer_is_free(l));
    }
    return NetworkParams(std::move(layers), std::move(free));
}

NetworkParams depth_pad(const NetworkParams& net, std::size_t depth)
{
    if (depth < net.depth())
        throw std::invalid_argument("depth_pad: target depth " + std::to_string(depth) + " below current depth "
                                    + std::to_string(net.depth()));
    if (depth == net.depth())
        return net;
    return compose_networks(identity_network(net.output_dim(), depth - net.depth() + 1), net);
}

ComplexityReport complexity(const NetworkParams& net, const std::optional<std::vector<bool>>& free_mask)
{
    const std::vector<bool>& mask = free_mask ? *free_mask : net.free_layers();
    if (mask.size() != net.depth())
        throw std::invalid_argument("complexity: free mask length differs from depth");

    ComplexityReport report;
    report.depth = net.depth();
    report.neurons = net.input_dim();
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& layer = net.layers()[l];
        report.neurons += layer.output_dim();
        std::size_t nnz = 0;
        const auto& w = layer.weights();
        for (Eigen::Index k = 0; k < w.nonZeros(); ++k)
            if (w.valuePtr()[k] != 0.0)
                ++nnz;
        const auto bias_nnz = static_cast<std::size_t>((layer.bias().array() != 0.0).count());
        report.nonzero_weights += nnz + bias_nnz;
        if (mask[l])
            report.free_weights += nnz + layer.output_dim();
    }
    return report;
}

void to_json(nlohmann::json& j, const NetworkParams& net)
{
    j = nlohmann::json::object();
    j["input_dim"] = net.input_dim();
    auto& layers = j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& layer = net.layers()[l];
        const Matrix dense(layer.weights());
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < dense.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < dense.cols(); ++c)
                row.push_back(dense(r, c));
            rows.push_back(std::move(row));
        }
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index r = 0; r < layer.bias().size(); ++r)
            bias.push_back(layer.bias()[r]);
        nlohmann::json entry{{"weights", std::move(rows)}, {"bias", std::move(bias)}};
        if (net.layer_is_free(l))
            entry["free"] = true;
        layers.push_back(std::move(entry));
    }
}

NetworkParams network_params_from_json(const nlohmann::json& j)
{
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    const auto& jl = j.at("layers");
    if (!jl.is_array() || jl.empty())
        throw std::invalid_argument("network JSON: 'layers' must be a non-empty array");
    std::vector<AffineMap> layers;
    std::vector<bool> free;
    std::size_t cols = input_dim;
    for (std::size_t l = 0; l < jl.size(); ++l) {
        const auto& rows = jl[l].at("weights");
        const auto& bias = jl[l].at("bias");
        if (!rows.is_array() || !bias.is_array() || rows.size() != bias.size())
            throw std::invalid_argument("network JSON: layer " + std::to_string(l)
                                        + " has mismatched weights/bias");
        std::vector<Triplet> t;
        Vector b(static_cast<Eigen::Index>(bias.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols)
                throw std::invalid_argument("network JSON: layer " + std::to_string(l) + " row "
                                            + std::to_string(r) + " has " + std::to_string(rows[r].size())
                                            + " entries, expected " + std::to_string(cols));
            for (std::size_t c = 0; c < cols; ++c) {
                const double v = rows[r][c].get<double>();
                if (v != 0.0)
                    t.emplace_back(r, c, v);
            }
            b[static_cast<Eigen::Index>(r)] = bias[r].get<double>();
        }
        layers.emplace_back(from_triplets(rows.size(), cols, t), std::move(b));
        free.push_back(jl[l].value("free", false));
        cols = rows.size();
    }
    return NetworkParams(std::move(layers), std::move(free));
}

std::string network_to_json(const NetworkParams& net)
{
    nlohmann::json j;
    to_json(j, net);
    return j.dump();
}

NetworkParams network_from_json(const std::string& text)
{
    try {
        return network_params_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("network JSON: ") + e.what());
    }
}

} // namespace reluflow
