#pragma once

#include "floweval/errors.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace floweval {

/// Uniform node-centered 2D grid with square cells.
/// Nodes sit at x0 + i*h, y0 + j*h with h = (x1-x0)/(nx-1) = (y1-y0)/(ny-1).
struct Grid {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0, x1 = 0.0;
    double y0 = 0.0, y1 = 0.0;
    double h = 0.0;

    /// Validates: nx,ny >= 3, x1 > x0, y1 > y0, equal spacing in x and y
    /// (relative mismatch <= 1e-12).
    static Grid make(int nx, int ny, double x0, double x1, double y0, double y1);

    /// n x n grid on [0,extent]^2.
    static Grid square(int n, double extent = 1.0);

    double x(int i) const { return x0 + i * h; }
    double y(int j) const { return y0 + j * h; }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    bool operator==(const Grid&) const = default;
};

/// Real scalar field on a Grid, row-major (x fastest).
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    /// Validates length; rejects NaN/Inf unless allow_nonfinite.
    static ScalarField make(const Grid& grid, std::vector<double> values,
                            bool allow_nonfinite = false);
    static ScalarField zeros(const Grid& grid);
    static ScalarField constant(const Grid& grid, double value);
    /// Sample f(x, y) at every node.
    static ScalarField from_function(const Grid& grid,
                                     const std::function<double(double, double)>& f);

    double at(int i, int j) const { return values[grid.index(i, j)]; }
    double& at(int i, int j) { return values[grid.index(i, j)]; }
};

/// Co-located velocity components and pressure on one Grid.
struct FlowField {
    ScalarField u;
    ScalarField v;
    ScalarField p;

    static FlowField make(ScalarField u, ScalarField v, ScalarField p);
    static FlowField zeros(const Grid& grid);
    const Grid& grid() const { return u.grid; }
};

/// Binary geometry occupancy: 0 inside the object, 1 outside.
/// Degenerate (single-phase) masks are constructible; geometry ops reject them.
struct GeometryMask {
    Grid grid;
    std::vector<std::uint8_t> values;

    static GeometryMask make(const Grid& grid, std::vector<std::uint8_t> values);
    std::uint8_t at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Signed shortest distance to the object boundary: negative inside,
/// positive outside.
struct SignedDistanceField {
    Grid grid;
    std::vector<double> values;

    /// Validates finiteness and |d| <= domain diagonal.
    static SignedDistanceField make(const Grid& grid, std::vector<double> values);
    double at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Per-node inclusion mask: 1 = node participates in a metric, 0 = excluded.
struct RegionMask {
    Grid grid;
    std::vector<std::uint8_t> values;

    static RegionMask make(const Grid& grid, std::vector<std::uint8_t> values);
    static RegionMask all(const Grid& grid);
    std::size_t count() const;
    std::uint8_t at(int i, int j) const { return values[grid.index(i, j)]; }
};

/// One dataset entry: geometry (mask and/or SDF), Reynolds number, and the
/// reference flow field.
struct Sample {
    std::string id;
    double re = 0.0;
    std::optional<GeometryMask> mask;
    std::optional<SignedDistanceField> sdf;
    FlowField truth;
    std::optional<std::string> category;

    static Sample make(std::string id, double re, std::optional<GeometryMask> mask,
                       std::optional<SignedDistanceField> sdf, FlowField truth,
                       std::optional<std::string> category = std::nullopt);
    const Grid& grid() const { return truth.grid(); }
};

/// Which of {u, v, p} participate in MSE channel averaging.
struct Channels {
    bool u = true;
    bool v = true;
    bool p = true;

    int count() const { return int(u) + int(v) + int(p); }
    bool operator==(const Channels&) const = default;
};

/// MSE-to-score mapping bounds.
struct ScoreScale {
    double mse_min = 1e-6;
    double mse_max = 1.0;

    static ScoreScale make(double mse_min, double mse_max);
    bool operator==(const ScoreScale&) const = default;
};

struct EvalConfig {
    double band_lo = 0.0;   ///< boundary-layer band: band_lo <= sdf <= band_hi
    double band_hi = 0.2;
    double mse_min = 1e-6;
    double mse_max = 1.0;
    int exclusion_halo = 1; ///< residual cells this close to geometry nodes are dropped
    Channels channels;
    bool aggregate_scores = false; ///< dataset aggregation: mean raw (default) vs mean score

    static EvalConfig make(double band_lo, double band_hi, double mse_min, double mse_max,
                           int exclusion_halo, Channels channels, bool aggregate_scores);
    void validate() const;
    ScoreScale scale() const { return ScoreScale{mse_min, mse_max}; }
    bool operator==(const EvalConfig&) const = default;
};

/// Nondimensional viscosity for the momentum residual, eta = 1/Re.
inline double viscosity(double re) {
    if (!(re > 0.0)) raise(ErrorCode::InvalidArgument, "Reynolds number must be positive");
    return 1.0 / re;
}

struct PerChannelMse {
    double u = 0.0, v = 0.0, p = 0.0;
};

struct MetricReport {
    double m1_mse = 0.0;
    double m2_mse = 0.0;
    double m3_raw = 0.0;
    double m1_score = 0.0;
    double m2_score = 0.0;
    double m3_score = 0.0;
    std::int64_t n_samples = 0;
    std::optional<PerChannelMse> m1_per_channel;
    std::optional<PerChannelMse> m2_per_channel;
};

} // namespace floweval
