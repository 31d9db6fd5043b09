#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "reluflow/network.hpp"
#include "test_support.hpp"

using namespace reluflow;
using reluflow::testing::random_network;
using reluflow::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

std::set<double> weight_values(const NetworkParams& net)
{
    std::set<double> values;
    for (const auto& layer : net.layers()) {
        const Matrix dense(layer.weights());
        for (Eigen::Index r = 0; r < dense.rows(); ++r)
            for (Eigen::Index c = 0; c < dense.cols(); ++c)
                values.insert(dense(r, c));
        for (Eigen::Index r = 0; r < layer.bias().size(); ++r)
            values.insert(layer.bias()[r]);
    }
    return values;
}

bool weights_in_gadget_set(const NetworkParams& net)
{
    const std::set<double> allowed{0.0, 0.5, -0.5, 1.0, -1.0};
    for (double v : weight_values(net))
        if (!allowed.count(v))
            return false;
    return true;
}

} // namespace

TEST_CASE("AffineMap rejects inconsistent shapes and non-finite entries")
{
    CHECK_THROWS_AS(AffineMap(Matrix::Ones(2, 3), Vector::Zero(3)), std::invalid_argument);
    Matrix bad = Matrix::Ones(1, 1);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(AffineMap(bad, Vector::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(AffineMap(Matrix::Ones(1, 1), Vector::Constant(1, INFINITY)), std::invalid_argument);
}

TEST_CASE("NetworkParams checks the layer chain")
{
    std::vector<AffineMap> layers;
    layers.emplace_back(Matrix::Ones(3, 2), Vector::Zero(3));
    layers.emplace_back(Matrix::Ones(1, 4), Vector::Zero(1));
    try {
        NetworkParams net(std::move(layers));
        FAIL("expected a dimension error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
    CHECK_THROWS_AS(NetworkParams({}), std::invalid_argument);
}

TEST_CASE("eval_network")
{
    SUBCASE("abs and identity gadgets")
    {
        CHECK(eval_network(abs_network(1), vec({-3}))[0] == 3.0);
        CHECK(eval_network(identity_network(1, 2), vec({-2}))[0] == -2.0);
    }
    SUBCASE("hand-composed two-layer network")
    {
        Matrix a1(2, 2);
        a1 << 2, 0, 0, 1;
        Matrix a2(1, 2);
        a2 << 1, 1;
        const NetworkParams net({AffineMap(a1, vec({-1, 0})), AffineMap(a2, vec({0}))});
        CHECK(eval_network(net, vec({1, 1}))[0] == 2.0);
    }
    SUBCASE("dimension mismatch names the layer")
    {
        try {
            eval_network(identity_network(2, 2), vec({1}));
            FAIL("expected a dimension error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
        }
    }
    SUBCASE("batch evaluation matches pointwise evaluation")
    {
        std::mt19937_64 rng(3);
        const auto net = random_network(rng, {3, 5, 4, 2});
        Matrix xs(3, 20);
        for (Eigen::Index c = 0; c < xs.cols(); ++c)
            xs.col(c) = random_vector(rng, 3, -2, 2);
        const Matrix ys = eval_network_batch(net, xs);
        for (Eigen::Index c = 0; c < xs.cols(); ++c)
            CHECK((ys.col(c) - eval_network(net, xs.col(c))).norm() == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("identity_network")
{
    CHECK(eval_network(identity_network(1, 2), vec({7.5}))[0] == 7.5);
    CHECK(eval_network(identity_network(3, 5), vec({-1, 0, 2})) == vec({-1, 0, 2}));
    CHECK(complexity(identity_network(2, 2)).neurons == 8);
    CHECK(complexity(identity_network(1, 2)).neurons == 4);
    CHECK(identity_network(3, 5).depth() == 5);
    for (std::size_t l = 0; l + 1 < 5; ++l)
        CHECK(identity_network(3, 5).layers()[l].output_dim() == 6);
    CHECK_THROWS_AS(identity_network(1, 1), std::invalid_argument);

    std::mt19937_64 rng(11);
    for (std::size_t d = 1; d <= 4; ++d) {
        const auto net = identity_network(d, 2 + d);
        for (int i = 0; i < 2500; ++i) {
            const Vector x = random_vector(rng, static_cast<Eigen::Index>(d), -10, 10);
            REQUIRE(eval_network(net, x) == x);
        }
    }
}

TEST_CASE("min2_network")
{
    const auto net = min2_network();
    CHECK(eval_network(net, vec({3, -1}))[0] == -1.0);
    CHECK(eval_network(net, vec({0.25, 0.25}))[0] == 0.25);
    CHECK(net.depth() == 2);
    CHECK(net.layers()[0].output_dim() == 4);
    CHECK(weights_in_gadget_set(net));
    const auto values = weight_values(net);
    CHECK(values.count(0.5));
    CHECK(values.count(-1.0));
}

TEST_CASE("min_tree_network")
{
    CHECK(complexity(min_tree_network(4)).neurons == 17);
    CHECK(eval_network(min_tree_network(2), vec({3, -1}))[0] == -1.0);
    CHECK(eval_network(min_tree_network(3), vec({2, 5, 1}))[0] == 1.0);
    CHECK(eval_network(min_tree_network(1), vec({-4}))[0] == -4.0);
    CHECK_THROWS_AS(min_tree_network(0), std::invalid_argument);

    SUBCASE("power-of-two complexity law")
    {
        for (std::size_t d : {2u, 4u, 8u, 16u}) {
            const auto net = min_tree_network(d);
            const auto rep = complexity(net);
            CHECK(rep.neurons == 5 * d - 3);
            CHECK(rep.depth == static_cast<std::size_t>(std::bit_width(d - 1)) + 1);
            // Hand count: 2 nonzeros in each of the 2d first-layer rows, 8 in each
            // merged row (d + d/2 + ... + 4 = 2d - 4 rows), 4 in the output row.
            CHECK(rep.nonzero_weights == 4 * d + 8 * (2 * d - 4) + 4);
            CHECK(rep.free_weights == 0);
        }
    }
    SUBCASE("nonzero weights grow linearly")
    {
        const auto a = complexity(min_tree_network(8)).nonzero_weights;
        const auto b = complexity(min_tree_network(16)).nonzero_weights;
        CHECK(static_cast<double>(b) / static_cast<double>(a) <= 2.5);
    }
    SUBCASE("weight set and sort oracle for general d")
    {
        std::mt19937_64 rng(5);
        for (std::size_t d = 1; d <= 24; ++d) {
            const auto net = min_tree_network(d);
            CHECK(weights_in_gadget_set(net));
            CHECK(net.depth() == static_cast<std::size_t>(std::bit_width(d - 1)) + 1);
            for (int i = 0; i < 400; ++i) {
                const Vector x = random_vector(rng, static_cast<Eigen::Index>(d), -10, 10);
                std::vector<double> sorted(x.begin(), x.end());
                std::sort(sorted.begin(), sorted.end());
                REQUIRE(std::abs(eval_network(net, x)[0] - sorted.front()) <= 1e-12);
            }
        }
    }
}

TEST_CASE("parallelize")
{
    const auto both = parallelize({identity_network(1, 2), identity_network(1, 2)});
    CHECK(eval_network(both, vec({1, -1})) == vec({1, -1}));
    const auto mixed = parallelize({abs_network(1), identity_network(1, 2)});
    CHECK(eval_network(mixed, vec({-2, -2})) == vec({2, -2}));
    CHECK(complexity(mixed).neurons == complexity(abs_network(1)).neurons + complexity(identity_network(1, 2)).neurons);
    CHECK_THROWS_AS(parallelize({identity_network(1, 2), identity_network(1, 3)}), std::invalid_argument);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_network(rng, {2, 4, 3});
        const auto b = random_network(rng, {3, 2, 1});
        const auto p = parallelize({a, b});
        CHECK(p.depth() == 2);
        for (int i = 0; i < 50; ++i) {
            const Vector x = random_vector(rng, 2, -3, 3), y = random_vector(rng, 3, -3, 3);
            Vector xy(5);
            xy << x, y;
            Vector expected(4);
            expected << eval_network(a, x), eval_network(b, y);
            REQUIRE((eval_network(p, xy) - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("sum_networks")
{
    CHECK(eval_network(sum_networks({abs_network(1), identity_network(1, 2)}, {1, 1}), vec({-1}))[0] == 0.0);
    CHECK(eval_network(sum_networks({abs_network(1)}, {-1}), vec({4}))[0] == -4.0);
    CHECK_THROWS_AS(sum_networks({abs_network(1), identity_network(1, 3)}, {1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(sum_networks({abs_network(1)}, {1, 2}), std::invalid_argument);

    std::mt19937_64 rng(23);
    const auto single = random_network(rng, {2, 3, 2});
    const auto same = sum_networks({single}, {1.0});
    for (int i = 0; i < 100; ++i) {
        const Vector x = random_vector(rng, 2, -5, 5);
        REQUIRE((eval_network(same, x) - eval_network(single, x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_network(rng, {3, 4, 5, 2});
        const auto b = random_network(rng, {3, 2, 3, 2});
        const double alpha = random_vector(rng, 1, -2, 2)[0], beta = random_vector(rng, 1, -2, 2)[0];
        const auto s = sum_networks({a, b}, {alpha, beta});
        CHECK(s.depth() == 3);
        for (int i = 0; i < 50; ++i) {
            const Vector x = random_vector(rng, 3, -3, 3);
            const Vector expected = alpha * eval_network(a, x) + beta * eval_network(b, x);
            REQUIRE((eval_network(s, x) - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("depth-one summands")
    {
        const auto a = linear_network(Matrix::Constant(1, 2, 2.0), vec({1}));
        const auto b = linear_network(Matrix::Constant(1, 2, -1.0), vec({3}));
        CHECK(eval_network(sum_networks({a, b}, {1, 2}), vec({1, 1}))[0] == doctest::Approx(5.0 + 2.0 * 1.0));
    }
}

TEST_CASE("compose_networks")
{
    CHECK(eval_network(compose_networks(identity_network(1, 2), abs_network(1)), vec({-5}))[0] == 5.0);
    const auto tree = compose_networks(min2_network(), parallelize({min2_network(), min2_network()}));
    CHECK(tree.depth() == 3);
    CHECK(eval_network(tree, vec({4, 2, 3, 9}))[0] == 2.0);
    CHECK_THROWS_AS(compose_networks(min2_network(), abs_network(1)), std::invalid_argument);

    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inner = random_network(rng, {3, 4, 2});
        const auto outer = random_network(rng, {2, 5, 3, 1});
        const auto c = compose_networks(outer, inner);
        CHECK(c.depth() == inner.depth() + outer.depth() - 1);
        for (int i = 0; i < 100; ++i) {
            const Vector x = random_vector(rng, 3, -3, 3);
            const Vector expected = eval_network(outer, eval_network(inner, x));
            REQUIRE((eval_network(c, x) - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("depth_pad keeps the function")
{
    std::mt19937_64 rng(31);
    const auto net = random_network(rng, {2, 3, 2});
    const auto padded = depth_pad(net, 5);
    CHECK(padded.depth() == 5);
    for (int i = 0; i < 100; ++i) {
        const Vector x = random_vector(rng, 2, -3, 3);
        REQUIRE((eval_network(padded, x) - eval_network(net, x)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(depth_pad(net, 1), std::invalid_argument);
}

TEST_CASE("complexity with an explicit free mask")
{
    const auto net = identity_network(1, 2);
    const auto fixed = complexity(net);
    CHECK(fixed.nonzero_weights == 4);
    CHECK(fixed.free_weights == 0);
    const auto masked = complexity(net, std::vector<bool>{true, false});
    CHECK(masked.free_weights == 2 + 2); // two weights, two biases
    CHECK(masked.free_weights <= masked.nonzero_weights + 3);
    CHECK_THROWS_AS(complexity(net, std::vector<bool>{true}), std::invalid_argument);
}

TEST_CASE("JSON serialization is value-exact")
{
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = random_network(rng, {2, 3, 4, 1});
        const auto back = network_from_json(network_to_json(net));
        REQUIRE(back.depth() == net.depth());
        for (std::size_t l = 0; l < net.depth(); ++l) {
            CHECK(Matrix(back.layers()[l].weights()) == Matrix(net.layers()[l].weights()));
            CHECK(back.layers()[l].bias() == net.layers()[l].bias());
        }
    }
    const auto tree = min_tree_network(5);
    CHECK(network_to_json(network_from_json(network_to_json(tree))) == network_to_json(tree));
    CHECK_THROWS_AS(network_from_json("{\"input_dim\": 2, \"layers\": [{\"weights\": [[1]], \"bias\": [0]}]}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(network_from_json("not json"), std::invalid_argument);
}
