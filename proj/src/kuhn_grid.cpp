#include "reluflow/kuhn_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace reluflow {

namespace {

constexpr double kInsideTolerance = 1e-9;

void check_dim(const KuhnGrid& grid, std::size_t n, const char* what)
{
    if (n != grid.dim())
        throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(n)
                                    + " does not match grid dimension " + std::to_string(grid.dim()));
}

void check_simplex(const KuhnGrid& grid, const SimplexRef& s)
{
    check_dim(grid, s.cell.size(), "SimplexRef cell");
    check_dim(grid, s.perm.size(), "SimplexRef perm");
    std::vector<bool> seen(grid.dim(), false);
    for (auto p : s.perm) {
        if (p >= grid.dim() || seen[p])
            throw std::invalid_argument("SimplexRef: perm is not a permutation");
        seen[p] = true;
    }
}

} // namespace

std::size_t factorial(std::size_t n)
{
    std::size_t f = 1;
    for (std::size_t i = 2; i <= n; ++i)
        f *= i;
    return f;
}

KuhnGrid::KuhnGrid(std::size_t dim, double cell_size) : dim_(dim), h_(cell_size)
{
    if (dim == 0)
        throw std::invalid_argument("KuhnGrid: dimension must be positive");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size))
        throw std::invalid_argument("KuhnGrid: cell size must be positive and finite");
}

double KuhnGrid::fineness() const
{
    return h_ * std::sqrt(static_cast<double>(dim_));
}

std::size_t KuhnGrid::max_neighbors() const
{
    return factorial(dim_ + 1);
}

Vector KuhnGrid::world(const VertexRef& v) const
{
    check_dim(*this, v.coords.size(), "VertexRef");
    Vector w(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < dim_; ++i)
        w[static_cast<Eigen::Index>(i)] = h_ * static_cast<double>(v.coords[i]);
    return w;
}

Location locate(const KuhnGrid& grid, const Vector& x)
{
    check_dim(grid, static_cast<std::size_t>(x.size()), "locate");
    if (!x.allFinite())
        throw std::invalid_argument("locate: non-finite point");
    const std::size_t d = grid.dim();
    Location loc;
    loc.simplex.cell.resize(d);
    loc.local.resize(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        const double scaled = x[static_cast<Eigen::Index>(i)] / grid.cell_size();
        const double cell = std::floor(scaled);
        loc.simplex.cell[i] = static_cast<std::int64_t>(cell);
        loc.local[static_cast<Eigen::Index>(i)] = scaled - cell;
    }
    loc.simplex.perm.resize(d);
    std::iota(loc.simplex.perm.begin(), loc.simplex.perm.end(), std::size_t{0});
    std::stable_sort(loc.simplex.perm.begin(), loc.simplex.perm.end(), [&](std::size_t a, std::size_t b) {
        return loc.local[static_cast<Eigen::Index>(a)] < loc.local[static_cast<Eigen::Index>(b)];
    });
    return loc;
}

std::vector<VertexRef> simplex_vertices(const KuhnGrid& grid, const SimplexRef& s)
{
    check_simplex(grid, s);
    const std::size_t d = grid.dim();
    std::vector<VertexRef> out;
    out.reserve(d + 1);
    VertexRef v{s.cell};
    out.push_back(v);
    for (std::size_t j = 0; j < d; ++j) {
        v.coords[s.perm[d - 1 - j]] += 1;
        out.push_back(v);
    }
    return out;
}

Vector barycentric(const KuhnGrid& grid, const SimplexRef& s, const Vector& x)
{
    check_simplex(grid, s);
    check_dim(grid, static_cast<std::size_t>(x.size()), "barycentric");
    const std::size_t d = grid.dim();
    // sorted[i] = local coordinate perm[i]; weights are consecutive gaps.
    std::vector<double> sorted(d);
    for (std::size_t i = 0; i < d; ++i) {
        const auto c = s.perm[i];
        sorted[i] = x[static_cast<Eigen::Index>(c)] / grid.cell_size() - static_cast<double>(s.cell[c]);
    }
    Vector w(static_cast<Eigen::Index>(d + 1));
    w[0] = 1.0 - sorted[d - 1];
    for (std::size_t j = 1; j < d; ++j)
        w[static_cast<Eigen::Index>(j)] = sorted[d - j] - sorted[d - j - 1];
    w[static_cast<Eigen::Index>(d)] = sorted[0];
    if (w.minCoeff() < -kInsideTolerance)
        throw std::invalid_argument("barycentric: point lies outside the simplex (min weight "
                                    + std::to_string(w.minCoeff()) + ")");
    return w;
}

std::vector<SimplexRef> neighborhood(const KuhnGrid& grid, const VertexRef& v)
{
    check_dim(grid, v.coords.size(), "neighborhood");
    const std::size_t d = grid.dim();
    // v = cell + b with b in {0,1}^d; the simplex (cell, perm) has v as a vertex
    // iff the ones of b are exactly the last |b| entries of perm.
    std::vector<SimplexRef> out;
    out.reserve(factorial(d + 1));
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        std::vector<std::size_t> zeros, ones;
        for (std::size_t i = 0; i < d; ++i)
            ((mask >> i) & 1U ? ones : zeros).push_back(i);
        SimplexRef s;
        s.cell = v.coords;
        for (auto i : ones)
            s.cell[i] -= 1;
        // zeros and ones are ascending, so next_permutation enumerates each block fully.
        do {
            do {
                s.perm = zeros;
                s.perm.insert(s.perm.end(), ones.begin(), ones.end());
                out.push_back(s);
            } while (std::next_permutation(ones.begin(), ones.end()));
        } while (std::next_permutation(zeros.begin(), zeros.end()));
    }
    return out;
}

bool omega_zero_contains(const Vector& z)
{
    if (z.size() == 0)
        return true;
    if (z.minCoeff() < -1.0 || z.maxCoeff() > 1.0)
        return false;
    // z_i <= z_j + 1 for all pairs reduces to max - min <= 1.
    return z.maxCoeff() - z.minCoeff() <= 1.0;
}

} // namespace reluflow
