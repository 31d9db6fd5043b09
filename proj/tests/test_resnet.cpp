#include <cmath>
#include <random>

#include "doctest.h"
#include "reluflow/resnet.hpp"
#include "test_support.hpp"

using namespace reluflow;
using reluflow::testing::random_network;
using reluflow::testing::random_vector;

namespace {

RhsSpec sin_rhs(std::size_t d)
{
    RhsSpec rhs;
    rhs.dim = d;
    rhs.bound_c = std::sqrt(static_cast<double>(d));
    rhs.lipschitz_L = 1.0;
    rhs.f = [](double, const Vector& x) { return Vector(x.array().sin()); };
    return rhs;
}

// sin(x + t), sampled on 4 equal time pieces.
RhsSpec stepped_rhs()
{
    RhsSpec rhs;
    rhs.dim = 1;
    rhs.bound_c = 1.0;
    rhs.lipschitz_L = 1.0;
    rhs.f = [](double t, const Vector& x) { return Vector::Constant(1, std::sin(x[0] + t)); };
    return piecewise_constant(rhs, 4);
}

double sup_error(const ResNetParams& net, const RhsSpec& rhs, const std::vector<Vector>& ys)
{
    double err = 0.0;
    for (const auto& y : ys) {
        const auto ref = reference_solve(rhs, y, 1e-10);
        const ResNetPath path(net, y);
        for (int j = 0; j <= 32; ++j)
            err = std::max(err, (path(j / 32.0) - ref(j / 32.0)).norm());
    }
    return err;
}

std::vector<Vector> grid_points(int count)
{
    std::vector<Vector> ys;
    for (int i = 0; i < count; ++i)
        ys.push_back(Vector::Constant(1, -1.0 + 2.0 * i / (count - 1)));
    return ys;
}

} // namespace

TEST_CASE("eval_resnet")
{
    const ResNetParams ident(1, {linear_network(Matrix::Identity(1, 1), Vector::Zero(1))}, {0});
    CHECK(eval_resnet(ident, 0.0, Vector::Constant(1, 3.0))[0] == 3.0);
    CHECK(eval_resnet(ident, 1.0, Vector::Constant(1, 3.0))[0] == 6.0);
    CHECK(eval_resnet(ident, 0.5, Vector::Constant(1, 3.0))[0] == 4.5);

    const ResNetParams ones(2, {linear_network(Matrix::Zero(2, 2), Vector::Ones(2))}, {0, 0, 0, 0, 0});
    const Vector end = eval_resnet(ones, 1.0, Vector::Zero(2));
    CHECK(end[0] == doctest::Approx(1.0));
    CHECK(end[1] == doctest::Approx(1.0));

    CHECK_THROWS_AS(eval_resnet(ident, 1.5, Vector::Zero(1)), std::invalid_argument);
    CHECK_THROWS_AS(eval_resnet(ident, 0.5, Vector::Zero(2)), std::invalid_argument);
    CHECK_THROWS_AS(ResNetParams(1, {identity_network(1, 2)}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(ResNetParams(1, {identity_network(2, 2)}, {0}), std::invalid_argument);

    SUBCASE("initial value and collinearity between nodes")
    {
        std::mt19937_64 rng(131);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 1 + trial % 7;
            std::vector<NetworkParams> pool;
            std::vector<std::size_t> refs;
            for (std::size_t k = 0; k < n; ++k) {
                pool.push_back(random_network(rng, {2, 3, 2}));
                refs.push_back(k);
            }
            const ResNetParams net(2, pool, refs);
            const Vector y = random_vector(rng, 2, -1, 1);
            const ResNetPath path(net, y);
            REQUIRE(path(0.0) == y);
            for (std::size_t k = 0; k < n; ++k) {
                const double a = static_cast<double>(k) / static_cast<double>(n);
                const double b = static_cast<double>(k + 1) / static_cast<double>(n);
                const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                const Vector expected = path.nodes()[k] + s * (path.nodes()[k + 1] - path.nodes()[k]);
                REQUIRE((path(a + s * (b - a)) - expected).cwiseAbs().maxCoeff() <= 1e-12);
                REQUIRE(path(a) == path.nodes()[k]);
            }
        }
    }
}

TEST_CASE("build_resnet")
{
    SUBCASE("zero rhs gives the identity flow")
    {
        RhsSpec zero;
        zero.dim = 2;
        zero.f = [](double, const Vector& x) { return Vector::Zero(x.size()); };
        const auto built = build_resnet(zero, 4, 2.0);
        std::mt19937_64 rng(137);
        for (int i = 0; i < 20; ++i) {
            const Vector y = random_vector(rng, 2, -3, 3);
            CHECK(eval_resnet(built.net, 0.7, y) == y);
        }
        for (const auto& b : built.report.blocks)
            CHECK(b.depth == 1);
    }
    SUBCASE("sin: error within the a-priori bound")
    {
        const auto rhs = sin_rhs(1);
        const auto built = build_resnet(rhs, 32, 4.0);
        CHECK(built.report.apriori_bound
              == doctest::Approx(perturbed_euler_bound(2.0 / 32.0, 1.0, 32, 1.0)).epsilon(1e-15));
        CHECK(built.net.blocks() == 32);
        CHECK(built.net.distinct_parameter_count() == 32);
        const double err = sup_error(built.net, rhs, grid_points(9));
        CHECK(err <= built.report.apriori_bound);
        CHECK(err < 0.05);
        for (const auto& b : built.report.blocks)
            CHECK(b.depth == built.report.blocks.front().depth);
    }
    SUBCASE("per-block neurons scale like n^d")
    {
        for (std::size_t d : {1u, 2u}) {
            const auto rhs = sin_rhs(d);
            const auto coarse = build_resnet(rhs, 4, 1.0);
            const auto fine = build_resnet(rhs, 8, 1.0);
            const double ratio = static_cast<double>(fine.report.blocks.front().neurons)
                                 / static_cast<double>(coarse.report.blocks.front().neurons);
            CHECK(ratio <= std::pow(2.0, static_cast<double>(d)) + 1.0);
            CHECK(ratio >= 1.0);
        }
    }
    SUBCASE("thread count does not change the result")
    {
        const auto rhs = sin_rhs(1);
        const auto a = build_resnet(rhs, 6, 2.0, {std::nullopt, 1});
        const auto b = build_resnet(rhs, 6, 2.0, {std::nullopt, 4});
        CHECK(resnet_to_json(a.net) == resnet_to_json(b.net));
    }
    CHECK_THROWS_AS(build_resnet(sin_rhs(1), 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_resnet(sin_rhs(1), 4, -1.0), std::invalid_argument);
}

TEST_CASE("resnet_as_rhs round-trips through Euler")
{
    std::mt19937_64 rng(139);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 3 + trial;
        std::vector<NetworkParams> pool;
        std::vector<std::size_t> refs;
        for (std::size_t k = 0; k < n; ++k) {
            pool.push_back(random_network(rng, {2, 4, 2}));
            refs.push_back(k);
        }
        const ResNetParams net(2, pool, refs);
        const auto rhs = resnet_as_rhs(net);
        const Vector y = random_vector(rng, 2, -1, 1);
        const auto euler = euler_solve(rhs, y, uniform_partition(n));
        const ResNetPath path(net, y);
        for (std::size_t k = 0; k <= n; ++k)
            REQUIRE(euler.states()[k] == path.nodes()[k]);
    }

    SUBCASE("the induced rhs selects the block of the current interval")
    {
        const ResNetParams net(2, {random_network(rng, {2, 3, 2}), random_network(rng, {2, 3, 2})}, {0, 1});
        const auto rhs = resnet_as_rhs(net);
        const Vector x = random_vector(rng, 2, -1, 1);
        CHECK(rhs(0.3, x) == eval_network(net.block(0), x));
        CHECK(rhs(0.5, x) == eval_network(net.block(1), x));
    }
    SUBCASE("the induced rhs of a built ResNet respects the declared bound")
    {
        const auto built = build_resnet(sin_rhs(1), 8, 3.0);
        const auto rhs = resnet_as_rhs(built.net);
        CHECK(rhs.bound_c == 1.0);
        for (int i = 0; i <= 200; ++i)
            for (double t : {0.0, 0.4, 0.99})
                REQUIRE(std::abs(rhs(t, Vector::Constant(1, -3.0 + 6.0 * i / 200.0))[0]) <= 1.0);
    }
}

TEST_CASE("build_shared_resnet")
{
    const auto rhs = stepped_rhs();
    CHECK_THROWS_AS(build_shared_resnet(sin_rhs(1), 2, 4.0, 0.01), std::invalid_argument);

    const auto ys = grid_points(5);
    double previous = INFINITY;
    for (std::size_t k : {2u, 16u}) {
        const auto built = build_shared_resnet(rhs, k, 4.0, 0.01);
        CHECK(built.net.blocks() == 4 * k);
        CHECK(built.net.pool().size() == 4);
        CHECK(built.net.distinct_parameter_count() == 4);
        for (std::size_t b = 0; b < built.net.blocks(); ++b)
            CHECK(built.net.block_refs()[b] == b / k);
        const double err = sup_error(built.net, rhs, ys);
        CHECK(err <= built.report.apriori_bound);
        CHECK(err < previous);
        previous = err;
    }

    SUBCASE("a time-independent rhs needs one parameter set")
    {
        const auto autonomous = piecewise_constant(sin_rhs(1), 1);
        const auto built = build_shared_resnet(autonomous, 8, 4.0, 0.01);
        CHECK(built.net.distinct_parameter_count() == 1);
        CHECK(built.net.blocks() == 8);
    }
}

TEST_CASE("ResNet JSON")
{
    const auto built = build_shared_resnet(stepped_rhs(), 2, 1.0, 0.1);
    const auto text = resnet_to_json(built.net);
    const auto back = resnet_from_json(text);
    CHECK(resnet_to_json(back) == text);
    CHECK(back.block_refs() == built.net.block_refs());
    CHECK(eval_resnet(back, 0.6, Vector::Constant(1, 0.3)) == eval_resnet(built.net, 0.6, Vector::Constant(1, 0.3)));
    CHECK_THROWS_AS(resnet_from_json("{\"n\": 2, \"dim\": 1, \"pool\": [], \"block_refs\": [0]}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(resnet_from_json("not json"), std::invalid_argument);
}
