#include "floweval/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace floweval {

namespace {

void require_stencil_grid(const Grid& g) {
    if (g.nx < 3 || g.ny < 3)
        raise(ErrorCode::InvalidArgument, "stencils need at least a 3x3 grid");
}

// d/dx along a row-major axis; stride 1 for x, nx for y.
void diff1(const std::vector<double>& f, std::vector<double>& out, int n,
           std::size_t base, std::size_t stride, double h) {
    const auto at = [&](int k) { return f[base + stride * k]; };
    out[0] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    for (int k = 1; k < n - 1; ++k) out[k] = (at(k + 1) - at(k - 1)) / (2.0 * h);
    out[n - 1] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
}

// d2/dx2 along one axis; 4-point one-sided closure at the ends (3-point
// second difference when the axis only has 3 nodes; still exact on quadratics).
void diff2(const std::vector<double>& f, std::vector<double>& out, int n,
           std::size_t base, std::size_t stride, double h) {
    const auto at = [&](int k) { return f[base + stride * k]; };
    const double h2 = h * h;
    if (n >= 4) {
        out[0] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
        out[n - 1] = (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2;
    } else {
        out[0] = (at(0) - 2.0 * at(1) + at(2)) / h2;
        out[n - 1] = out[0];
    }
    for (int k = 1; k < n - 1; ++k) out[k] = (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2;
}

} // namespace

Gradient gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    require_stencil_grid(g);
    std::vector<double> fx(g.size()), fy(g.size());
    std::vector<double> line(std::max(g.nx, g.ny));
    for (int j = 0; j < g.ny; ++j) {
        diff1(f.values, line, g.nx, g.index(0, j), 1, g.h);
        for (int i = 0; i < g.nx; ++i) fx[g.index(i, j)] = line[i];
    }
    for (int i = 0; i < g.nx; ++i) {
        diff1(f.values, line, g.ny, g.index(i, 0), g.nx, g.h);
        for (int j = 0; j < g.ny; ++j) fy[g.index(i, j)] = line[j];
    }
    return Gradient{ScalarField::make(g, std::move(fx), true),
                    ScalarField::make(g, std::move(fy), true)};
}

ScalarField laplacian(const ScalarField& f) {
    const Grid& g = f.grid;
    require_stencil_grid(g);
    std::vector<double> lap(g.size(), 0.0);
    std::vector<double> line(std::max(g.nx, g.ny));
    for (int j = 0; j < g.ny; ++j) {
        diff2(f.values, line, g.nx, g.index(0, j), 1, g.h);
        for (int i = 0; i < g.nx; ++i) lap[g.index(i, j)] = line[i];
    }
    for (int i = 0; i < g.nx; ++i) {
        diff2(f.values, line, g.ny, g.index(i, 0), g.nx, g.h);
        for (int j = 0; j < g.ny; ++j) lap[g.index(i, j)] += line[j];
    }
    return ScalarField::make(g, std::move(lap), true);
}

std::pair<ScalarField, ScalarField> momentum_residual(const FlowField& flow, double re,
                                                      const EvalConfig& config) {
    config.validate();
    const double eta = viscosity(re);
    const Grid& g = flow.grid();

    const Gradient du = gradient(flow.u);
    const Gradient dv = gradient(flow.v);
    const Gradient dp = gradient(flow.p);
    const ScalarField lap_u = laplacian(flow.u);
    const ScalarField lap_v = laplacian(flow.v);

    std::vector<double> rx(g.size()), ry(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double u = flow.u.values[k];
        const double v = flow.v.values[k];
        rx[k] = u * du.x.values[k] + v * du.y.values[k] - eta * lap_u.values[k] +
                dp.x.values[k];
        ry[k] = u * dv.x.values[k] + v * dv.y.values[k] - eta * lap_v.values[k] +
                dp.y.values[k];
    }
    return {ScalarField::make(g, std::move(rx), true),
            ScalarField::make(g, std::move(ry), true)};
}

std::size_t CellMask::count() const {
    return static_cast<std::size_t>(std::count(included.begin(), included.end(), 1));
}

RegionMask erode_inclusion(const RegionMask& inclusion, int halo) {
    if (halo < 0) raise(ErrorCode::InvalidArgument, "halo must be >= 0");
    if (halo == 0) return inclusion;
    const Grid& g = inclusion.grid;
    // separable min filter: a square window is exact for Chebyshev distance
    std::vector<std::uint8_t> tmp(g.size()), out(g.size());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::uint8_t m = 1;
            for (int di = -halo; di <= halo; ++di) {
                const int ii = std::clamp(i + di, 0, g.nx - 1);
                m = std::min(m, inclusion.values[g.index(ii, j)]);
            }
            tmp[g.index(i, j)] = m;
        }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::uint8_t m = 1;
            for (int dj = -halo; dj <= halo; ++dj) {
                const int jj = std::clamp(j + dj, 0, g.ny - 1);
                m = std::min(m, tmp[g.index(i, jj)]);
            }
            out[g.index(i, j)] = m;
        }
    return RegionMask::make(g, std::move(out));
}

namespace {

// Shared cell walk: corner-mean quadrature of one or two squared fields over
// cells whose eroded corner nodes are all included; row-major deterministic sum.
struct CellIntegral {
    std::vector<double> cell_norms;
    CellMask cells;
    double total = 0.0;
};

template <typename CornerValue>
CellIntegral integrate_cells(const Grid& g, const RegionMask& inclusion, int halo,
                             CornerValue&& corner_value) {
    const RegionMask eroded = erode_inclusion(inclusion, halo);
    CellIntegral out;
    out.cells.nx = g.nx - 1;
    out.cells.ny = g.ny - 1;
    out.cells.included.assign(static_cast<std::size_t>(out.cells.nx) * out.cells.ny, 0);
    out.cell_norms.assign(out.cells.included.size(), 0.0);
    const double area = g.h * g.h;
    std::size_t n_included = 0;
    for (int j = 0; j < out.cells.ny; ++j) {
        for (int i = 0; i < out.cells.nx; ++i) {
            const bool keep = eroded.at(i, j) && eroded.at(i + 1, j) &&
                              eroded.at(i, j + 1) && eroded.at(i + 1, j + 1);
            if (!keep) continue;
            const double mean =
                0.25 * (corner_value(i, j) + corner_value(i + 1, j) +
                        corner_value(i, j + 1) + corner_value(i + 1, j + 1));
            const std::size_t c = out.cells.index(i, j);
            out.cells.included[c] = 1;
            out.cell_norms[c] = area * mean;
            out.total += out.cell_norms[c];
            ++n_included;
        }
    }
    if (n_included == 0)
        raise(ErrorCode::AllCellsExcluded, "every cell is excluded from the integral");
    return out;
}

} // namespace

ResidualFields cell_l2_total(const ScalarField& rx, const ScalarField& ry,
                             const RegionMask& inclusion, int halo) {
    if (!(rx.grid == ry.grid) || !(rx.grid == inclusion.grid))
        raise(ErrorCode::ShapeMismatch, "residual fields and mask must share a grid");
    const Grid& g = rx.grid;
    auto integral = integrate_cells(g, inclusion, halo, [&](int i, int j) {
        const double a = rx.at(i, j);
        const double b = ry.at(i, j);
        return a * a + b * b;
    });
    return ResidualFields{rx, ry, std::move(integral.cell_norms),
                          std::move(integral.cells), integral.total};
}

DerivativeErrorFields derivative_error(const FlowField& pred, const FlowField& truth,
                                       const RegionMask& inclusion, int halo) {
    if (!(pred.grid() == truth.grid()) || !(pred.grid() == inclusion.grid))
        raise(ErrorCode::ShapeMismatch, "prediction and truth must share a grid");
    const Grid& g = pred.grid();

    const Gradient du_p = gradient(pred.u);
    const Gradient dv_p = gradient(pred.v);
    const Gradient du_t = gradient(truth.u);
    const Gradient dv_t = gradient(truth.v);

    std::vector<double> u_err(g.size()), v_err(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double ex = du_p.x.values[k] - du_t.x.values[k];
        const double ey = du_p.y.values[k] - du_t.y.values[k];
        u_err[k] = ex * ex + ey * ey;
        const double fx = dv_p.x.values[k] - dv_t.x.values[k];
        const double fy = dv_p.y.values[k] - dv_t.y.values[k];
        v_err[k] = fx * fx + fy * fy;
    }
    auto u_field = ScalarField::make(g, std::move(u_err), true);
    auto v_field = ScalarField::make(g, std::move(v_err), true);

    auto integral = integrate_cells(g, inclusion, halo, [&](int i, int j) {
        return u_field.at(i, j) + v_field.at(i, j);
    });
    return DerivativeErrorFields{std::move(u_field), std::move(v_field),
                                 std::move(integral.cell_norms),
                                 std::move(integral.cells), integral.total};
}

} // namespace floweval
