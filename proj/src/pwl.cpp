#include "reluflow/pwl.hpp"

#include <bit>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace reluflow {

namespace {

using Triplet = Eigen::Triplet<double>;

std::int64_t checked_cells(const KuhnGrid& grid, double r)
{
    if (!(r > 0.0) || !std::isfinite(r))
        throw std::invalid_argument("PWLFunction: cube radius must be positive and finite");
    const double ratio = r / grid.cell_size();
    const double cells = std::round(ratio);
    if (cells < 1.0 || std::abs(cells - ratio) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("PWLFunction: cube radius " + std::to_string(r)
                                    + " is not an integer multiple of the cell size "
                                    + std::to_string(grid.cell_size()));
    return static_cast<std::int64_t>(cells);
}

// Coefficients of the barycentric weight of vertex `j` of simplex `s`, as an
// affine function of the world position.
AffineMap barycentric_piece(const KuhnGrid& grid, const SimplexRef& s, std::size_t j)
{
    const std::size_t d = grid.dim();
    const double inv_h = 1.0 / grid.cell_size();
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(d));
    double b = 0.0;
    // u_c = y_c / h - cell_c
    auto add = [&](std::size_t c, double coef) {
        a[static_cast<Eigen::Index>(c)] += coef * inv_h;
        b -= coef * static_cast<double>(s.cell[c]);
    };
    if (j == 0) {
        b += 1.0;
        add(s.perm[d - 1], -1.0);
    } else if (j == d) {
        add(s.perm[0], 1.0);
    } else {
        add(s.perm[d - j], 1.0);
        add(s.perm[d - j - 1], -1.0);
    }
    return AffineMap(Matrix(a), Vector::Constant(1, b));
}

std::size_t ceil_log2(std::size_t n)
{
    return static_cast<std::size_t>(std::bit_width(n - 1));
}

} // namespace

PWLFunction::PWLFunction(KuhnGrid grid, double cube_radius, std::size_t output_dim,
                         std::map<VertexRef, Vector> values)
    : grid_(grid), r_(cube_radius), cells_(checked_cells(grid, cube_radius)), m_(output_dim),
      values_(std::move(values))
{
    if (m_ == 0)
        throw std::invalid_argument("PWLFunction: output dimension must be positive");
    for (const auto& [v, value] : values_) {
        if (v.coords.size() != grid_.dim())
            throw std::invalid_argument("PWLFunction: vertex dimension mismatch");
        for (auto c : v.coords)
            if (c < -cells_ || c > cells_)
                throw std::invalid_argument("PWLFunction: vertex outside the cube [-r, r]^d");
        if (static_cast<std::size_t>(value.size()) != m_)
            throw std::invalid_argument("PWLFunction: value dimension mismatch");
        if (!value.allFinite())
            throw std::invalid_argument("PWLFunction: non-finite vertex value");
    }
}

Vector PWLFunction::value(const VertexRef& v) const
{
    const auto it = values_.find(v);
    if (it == values_.end())
        return Vector::Zero(static_cast<Eigen::Index>(m_));
    return it->second;
}

std::size_t PWLFunction::degrees_of_freedom() const
{
    std::size_t n = 0;
    for (const auto& [v, value] : values_)
        if ((value.array() != 0.0).any())
            ++n;
    return n;
}

double PWLFunction::max_value_norm() const
{
    double m = 0.0;
    for (const auto& [v, value] : values_)
        m = std::max(m, value.norm());
    return m;
}

Vector eval_pwl(const PWLFunction& f, const Vector& x)
{
    const auto loc = locate(f.grid(), x);
    const auto verts = simplex_vertices(f.grid(), loc.simplex);
    const Vector w = barycentric(f.grid(), loc.simplex, x);
    Vector y = Vector::Zero(static_cast<Eigen::Index>(f.output_dim()));
    for (std::size_t j = 0; j < verts.size(); ++j) {
        const auto it = f.values().find(verts[j]);
        if (it != f.values().end())
            y += w[static_cast<Eigen::Index>(j)] * it->second;
    }
    return y;
}

NodalPieces nodal_pieces(const KuhnGrid& grid, const VertexRef& v)
{
    NodalPieces out{v, {}};
    for (const auto& s : neighborhood(grid, v)) {
        const auto verts = simplex_vertices(grid, s);
        std::size_t j = 0;
        while (j < verts.size() && verts[j] != v)
            ++j;
        if (j == verts.size())
            throw std::logic_error("nodal_pieces: neighborhood simplex does not contain its vertex");
        out.pieces.emplace_back(s, barycentric_piece(grid, s, j));
    }
    return out;
}

std::size_t compiled_depth(std::size_t d)
{
    return ceil_log2(factorial(d + 1)) + 2;
}

namespace {

NetworkParams nodal_network_from_tree(const KuhnGrid& grid, const VertexRef& v, const NetworkParams& tree)
{
    const auto np = nodal_pieces(grid, v);
    const std::size_t d = grid.dim();
    std::vector<Triplet> t;
    Vector bias(static_cast<Eigen::Index>(np.pieces.size()));
    for (std::size_t k = 0; k < np.pieces.size(); ++k) {
        const auto& piece = np.pieces[k].second;
        for (Eigen::Index r = 0; r < piece.weights().outerSize(); ++r)
            for (SparseMatrix::InnerIterator it(piece.weights(), r); it; ++it)
                t.emplace_back(static_cast<Eigen::Index>(k), it.col(), it.value());
        bias[static_cast<Eigen::Index>(k)] = piece.bias()[0];
    }
    SparseMatrix first(static_cast<Eigen::Index>(np.pieces.size()), static_cast<Eigen::Index>(d));
    first.setFromTriplets(t.begin(), t.end());

    std::vector<AffineMap> layers;
    layers.emplace_back(std::move(first), std::move(bias));
    std::vector<bool> free{true};
    for (const auto& layer : tree.layers()) {
        layers.push_back(layer);
        free.push_back(false);
    }
    return NetworkParams(std::move(layers), std::move(free));
}

NetworkParams compile_component(const PWLFunction& f, std::size_t component, const NetworkParams& tree)
{
    std::vector<NetworkParams> nets;
    std::vector<double> coefficients;
    for (const auto& [v, value] : f.values()) {
        const double c = value[static_cast<Eigen::Index>(component)];
        if (c == 0.0)
            continue;
        nets.push_back(nodal_network_from_tree(f.grid(), v, tree));
        coefficients.push_back(c);
    }
    if (nets.empty())
        return zero_network(f.input_dim(), 1, compiled_depth(f.input_dim()));
    return sum_networks(nets, coefficients);
}

} // namespace

NetworkParams nodal_basis_network(const KuhnGrid& grid, const VertexRef& v)
{
    return nodal_network_from_tree(grid, v, min_tree_network(grid.max_neighbors()));
}

NetworkParams compile_pwl(const PWLFunction& f)
{
    const std::size_t d = f.input_dim();
    const std::size_t m = f.output_dim();
    if (f.degrees_of_freedom() == 0)
        return zero_network(d, m, 1);

    const NetworkParams tree = min_tree_network(f.grid().max_neighbors());
    if (m == 1)
        return compile_component(f, 0, tree);

    std::vector<NetworkParams> parts;
    parts.reserve(m);
    for (std::size_t j = 0; j < m; ++j)
        parts.push_back(compile_component(f, j, tree));
    Matrix fan(static_cast<Eigen::Index>(m * d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < m; ++j)
        fan.block(static_cast<Eigen::Index>(j * d), 0, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))
            = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    return compose_networks(parallelize(parts), linear_network(fan, Vector::Zero(fan.rows())));
}

std::int64_t cells_for_fineness(std::size_t dim, double r, double delta)
{
    if (!(r > 0.0) || !std::isfinite(r))
        throw std::invalid_argument("interpolate: cube radius must be positive and finite");
    if (!(delta > 0.0))
        throw std::invalid_argument("interpolate: delta must be positive");
    const double cells = std::ceil(std::sqrt(static_cast<double>(dim)) * r / delta);
    if (cells > 1e7)
        throw std::invalid_argument("interpolate: grid with " + std::to_string(cells)
                                    + " cells per half-axis is too large");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(cells));
}

PWLFunction interpolate(const ScalarField& f, std::size_t dim, double r, double delta)
{
    if (dim == 0)
        throw std::invalid_argument("interpolate: dimension must be positive");
    const std::int64_t cells = cells_for_fineness(dim, r, delta);
    const KuhnGrid grid(dim, r / static_cast<double>(cells));

    std::map<VertexRef, Vector> values;
    std::size_t m = 0;
    VertexRef v{std::vector<std::int64_t>(dim, -cells)};
    for (;;) {
        Vector y = f(grid.world(v));
        if (m == 0)
            m = static_cast<std::size_t>(y.size());
        else if (static_cast<std::size_t>(y.size()) != m)
            throw std::invalid_argument("interpolate: function changed its output dimension");
        values.emplace_hint(values.end(), v, std::move(y));

        // odometer over [-cells, cells]^d, last coordinate fastest (keeps map order)
        std::size_t i = dim;
        while (i > 0) {
            --i;
            if (++v.coords[i] <= cells)
                break;
            v.coords[i] = -cells;
            if (i == 0)
                return PWLFunction(grid, r, m, std::move(values));
        }
    }
}

LipschitzApproximation approximate_lipschitz(const ScalarField& f, std::size_t dim, double lipschitz, double bound_c,
                                             double r, double eps)
{
    if (!(eps > 0.0))
        throw std::invalid_argument("approximate_lipschitz: eps must be positive");
    if (lipschitz < 0.0)
        throw std::invalid_argument("approximate_lipschitz: Lipschitz constant must be non-negative");
    const double delta = lipschitz > 0.0 ? eps / lipschitz : std::numeric_limits<double>::infinity();
    PWLFunction g = interpolate(f, dim, r, delta);
    if (g.max_value_norm() > bound_c * (1.0 + 1e-12) + 1e-12)
        std::cerr << "warning: approximate_lipschitz: sampled |f| = " << g.max_value_norm()
                  << " exceeds the declared bound " << bound_c << '\n';
    NetworkParams net = compile_pwl(g);
    ComplexityReport report = complexity(net);
    return {std::move(net), report, std::move(g)};
}

std::string pwl_to_json(const PWLFunction& f)
{
    nlohmann::json j;
    j["dim"] = f.input_dim();
    j["h"] = f.grid().cell_size();
    j["r"] = f.cube_radius();
    j["output_dim"] = f.output_dim();
    auto& values = j["values"] = nlohmann::json::array();
    for (const auto& [v, value] : f.values())
        values.push_back({{"vertex", v.coords}, {"value", std::vector<double>(value.begin(), value.end())}});
    return j.dump();
}

PWLFunction pwl_from_json(const std::string& text)
{
    try {
        const auto j = nlohmann::json::parse(text);
        const auto dim = j.at("dim").get<std::size_t>();
        const KuhnGrid grid(dim, j.at("h").get<double>());
        const double r = j.at("r").get<double>();
        std::size_t m = j.value("output_dim", std::size_t{0});
        std::map<VertexRef, Vector> values;
        for (const auto& entry : j.at("values")) {
            VertexRef v{entry.at("vertex").get<std::vector<std::int64_t>>()};
            const auto raw = entry.at("value").get<std::vector<double>>();
            if (m == 0)
                m = raw.size();
            Vector value = Eigen::Map<const Vector>(raw.data(), static_cast<Eigen::Index>(raw.size()));
            if (!values.emplace(std::move(v), std::move(value)).second)
                throw std::invalid_argument("PWL JSON: duplicate vertex");
        }
        return PWLFunction(grid, r, m == 0 ? 1 : m, std::move(values));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("PWL JSON: ") + e.what());
    }
}

} // namespace reluflow
