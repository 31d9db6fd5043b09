#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "reluflow/kuhn_grid.hpp"
#include "reluflow/network.hpp"

namespace reluflow {

/// Piecewise linear function on a KuhnGrid, given by its vertex values on the
/// cube [-r, r]^d. Vertices without a stored value read as zero.
class PWLFunction {
public:
    PWLFunction(KuhnGrid grid, double cube_radius, std::size_t output_dim, std::map<VertexRef, Vector> values);

    const KuhnGrid& grid() const { return grid_; }
    double cube_radius() const { return r_; }
    /// Cube radius in lattice units, r / h.
    std::int64_t cube_cells() const { return cells_; }
    std::size_t input_dim() const { return grid_.dim(); }
    std::size_t output_dim() const { return m_; }
    const std::map<VertexRef, Vector>& values() const { return values_; }

    /// Value at a lattice vertex (zero if absent).
    Vector value(const VertexRef& v) const;
    /// Number of vertices with a nonzero value.
    std::size_t degrees_of_freedom() const;
    double max_value_norm() const;

private:
    KuhnGrid grid_;
    double r_;
    std::int64_t cells_;
    std::size_t m_;
    std::map<VertexRef, Vector> values_;
};

/// One affine piece per simplex around a vertex: g agrees with the nodal
/// basis function on that simplex.
struct NodalPieces {
    VertexRef vertex;
    std::vector<std::pair<SimplexRef, AffineMap>> pieces;
};

using ScalarField = std::function<Vector(const Vector&)>;

Vector eval_pwl(const PWLFunction& f, const Vector& x);

NodalPieces nodal_pieces(const KuhnGrid& grid, const VertexRef& v);

/// min_k rho(g_k(.)) over the pieces around v; depth ceil(log2((d+1)!)) + 2.
NetworkParams nodal_basis_network(const KuhnGrid& grid, const VertexRef& v);

/// Depth of every non-degenerate compiled network in dimension d.
std::size_t compiled_depth(std::size_t d);

/// Exact ReLU expression of f. Returns the one-layer zero network when f has
/// no degrees of freedom.
NetworkParams compile_pwl(const PWLFunction& f);

/// Number of lattice cells per half-axis so that the grid fineness is at most delta.
std::int64_t cells_for_fineness(std::size_t dim, double r, double delta);

/// Interpolant of f on [-r, r]^d with cell size r / ceil(sqrt(d) r / delta).
PWLFunction interpolate(const ScalarField& f, std::size_t dim, double r, double delta);

struct LipschitzApproximation {
    NetworkParams network;
    ComplexityReport report;
    PWLFunction interpolant;
};

/// Network within eps of an L-Lipschitz f on [-r, r]^d, with delta = eps / L.
/// `bound_c` is the caller's bound on |f| and is not used by the construction.
LipschitzApproximation approximate_lipschitz(const ScalarField& f, std::size_t dim, double lipschitz, double bound_c,
                                             double r, double eps);

std::string pwl_to_json(const PWLFunction& f);
PWLFunction pwl_from_json(const std::string& text);

} // namespace reluflow
