#pragma once

#include "floweval/types.hpp"

#include <utility>
#include <vector>

namespace floweval {

struct Gradient {
    ScalarField x;
    ScalarField y;
};

/// Second-order central differences at interior nodes, second-order
/// one-sided 3-point stencils on the domain boundary. Exact for polynomials
/// of degree <= 2.
Gradient gradient(const ScalarField& f);

/// 5-point fxx + fyy in the interior; one-sided second-order second-derivative
/// closures on the domain boundary (4-point when the axis has >= 4 nodes).
ScalarField laplacian(const ScalarField& f);

/// Steady momentum residuals
///   r_x = u du/dx + v du/dy - eta lap(u) + dp/dx
///   r_y = u dv/dx + v dv/dy - eta lap(v) + dp/dy
/// with eta = 1/re. The time-derivative term is identically zero for the
/// steady fields this harness evaluates.
std::pair<ScalarField, ScalarField> momentum_residual(const FlowField& flow, double re,
                                                      const EvalConfig& config);

/// Inclusion mask over grid cells; cell (i, j) spans nodes (i..i+1, j..j+1).
struct CellMask {
    int nx = 0; ///< cells along x = grid.nx - 1
    int ny = 0;
    std::vector<std::uint8_t> included;

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
    std::size_t count() const;
};

struct ResidualFields {
    ScalarField rx;
    ScalarField ry;
    std::vector<double> cell_norms; ///< per cell: ||rx||^2_L2(e) + ||ry||^2_L2(e); 0 when excluded
    CellMask included_cells;
    double r_total = 0.0; ///< row-major sum of cell_norms over included cells
};

/// Integrates rx^2 + ry^2 cell by cell with corner-mean quadrature
/// (h^2 * mean of the four corner values). A cell is dropped when any corner
/// node is excluded by `inclusion` or lies within `halo` nodes (Chebyshev
/// distance) of an excluded node. Throws AllCellsExcluded if nothing survives.
ResidualFields cell_l2_total(const ScalarField& rx, const ScalarField& ry,
                             const RegionMask& inclusion, int halo);

struct DerivativeErrorFields {
    ScalarField u_err; ///< (du/dx - du_true/dx)^2 + (du/dy - du_true/dy)^2
    ScalarField v_err;
    std::vector<double> cell_norms;
    CellMask included_cells;
    double total = 0.0;
};

/// Pointwise squared errors of the velocity derivatives against the truth,
/// integrated cell-wise with the same exclusion rule as cell_l2_total.
DerivativeErrorFields derivative_error(const FlowField& pred, const FlowField& truth,
                                       const RegionMask& inclusion, int halo);

/// Node inclusion mask eroded by a Chebyshev-ball of radius halo: a node
/// survives only if no excluded node lies within `halo` of it.
RegionMask erode_inclusion(const RegionMask& inclusion, int halo);

} // namespace floweval
