#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace reluflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// One layer T(x) = W x + b. Weights are stored sparsely; the constructions
/// in this library produce block-structured matrices that are mostly zero.
class AffineMap {
public:
    AffineMap(SparseMatrix weights, Vector bias);
    AffineMap(const Matrix& weights, Vector bias);

    std::size_t input_dim() const { return static_cast<std::size_t>(weights_.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(weights_.rows()); }

    const SparseMatrix& weights() const { return weights_; }
    const Vector& bias() const { return bias_; }

    Vector apply(const Vector& x) const;
    Matrix apply(const Matrix& xs) const;

private:
    SparseMatrix weights_;
    Vector bias_;
};

/// ReLU network x -> T_L(rho(T_{L-1}(... rho(T_1(x))))).
///
/// `free_layers[l]` marks layers whose parameters depend on the approximated
/// function; everything else is fixed by the construction.
class NetworkParams {
public:
    explicit NetworkParams(std::vector<AffineMap> layers, std::vector<bool> free_layers = {});

    std::size_t input_dim() const { return layers_.front().input_dim(); }
    std::size_t output_dim() const { return layers_.back().output_dim(); }
    std::size_t depth() const { return layers_.size(); }

    const std::vector<AffineMap>& layers() const { return layers_; }
    const std::vector<bool>& free_layers() const { return free_layers_; }
    bool layer_is_free(std::size_t l) const { return free_layers_[l]; }

private:
    std::vector<AffineMap> layers_;
    std::vector<bool> free_layers_;
};

struct ComplexityReport {
    std::size_t depth = 0;
    std::size_t neurons = 0;
    std::size_t nonzero_weights = 0;
    std::size_t free_weights = 0;
};

Vector eval_network(const NetworkParams& net, const Vector& x);

/// Column-wise evaluation of a batch of inputs (one input per column).
Matrix eval_network_batch(const NetworkParams& net, const Matrix& xs);

// Gadgets.
NetworkParams identity_network(std::size_t d, std::size_t depth);
NetworkParams abs_network(std::size_t d, std::size_t depth = 2);
NetworkParams min2_network();
NetworkParams min_tree_network(std::size_t d);
NetworkParams zero_network(std::size_t input_dim, std::size_t output_dim, std::size_t depth = 1);
NetworkParams linear_network(const Matrix& weights, const Vector& bias);

// Combinators.
NetworkParams parallelize(const std::vector<NetworkParams>& nets);
NetworkParams sum_networks(const std::vector<NetworkParams>& nets, const std::vector<double>& coefficients);
NetworkParams compose_networks(const NetworkParams& outer, const NetworkParams& inner);
NetworkParams depth_pad(const NetworkParams& net, std::size_t depth);

/// Exact parameter accounting. `free_mask` overrides the per-layer free flags
/// carried by the network.
ComplexityReport complexity(const NetworkParams& net,
                            const std::optional<std::vector<bool>>& free_mask = std::nullopt);

std::string network_to_json(const NetworkParams& net);
NetworkParams network_from_json(const std::string& text);

} // namespace reluflow
