#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "reluflow/network.hpp"

namespace reluflow {

/// Lattice point of the scaled standard triangulation; world position = h * coords.
struct VertexRef {
    std::vector<std::int64_t> coords;

    auto operator<=>(const VertexRef&) const = default;
    bool operator==(const VertexRef&) const = default;
};

/// Simplex {cell + u : 0 <= u[perm[0]] <= ... <= u[perm[d-1]] <= 1} (in cell units).
/// `perm` holds 0-based coordinate indices.
struct SimplexRef {
    std::vector<std::int64_t> cell;
    std::vector<std::size_t> perm;

    auto operator<=>(const SimplexRef&) const = default;
    bool operator==(const SimplexRef&) const = default;
};

/// Standard (Kuhn) triangulation of R^d scaled by the cell size h.
class KuhnGrid {
public:
    KuhnGrid(std::size_t dim, double cell_size);

    std::size_t dim() const { return dim_; }
    double cell_size() const { return h_; }
    double fineness() const;
    /// Maximum number of simplices sharing a vertex, (d+1)!.
    std::size_t max_neighbors() const;

    Vector world(const VertexRef& v) const;

private:
    std::size_t dim_;
    double h_;
};

struct Location {
    SimplexRef simplex;
    Vector local; // fractional position inside the cell, in cell units
};

Location locate(const KuhnGrid& grid, const Vector& x);

/// Vertices ordered from the cell corner: 0, e_{perm[d-1]}, e_{perm[d-1]} + e_{perm[d-2]}, ..., 1.
std::vector<VertexRef> simplex_vertices(const KuhnGrid& grid, const SimplexRef& s);

/// Barycentric weights of x relative to simplex_vertices(s). Throws if x lies
/// outside the simplex by more than 1e-9 cell units.
Vector barycentric(const KuhnGrid& grid, const SimplexRef& s, const Vector& x);

/// All (d+1)! simplices containing v.
std::vector<SimplexRef> neighborhood(const KuhnGrid& grid, const VertexRef& v);

/// Membership in the closed star of the origin of the unscaled triangulation:
/// z in [-1,1]^d and z_i <= z_j + 1 for all i, j.
bool omega_zero_contains(const Vector& z);

std::size_t factorial(std::size_t n);

} // namespace reluflow
