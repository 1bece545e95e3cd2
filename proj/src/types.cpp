#include "floweval/types.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace floweval {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateMask: return "DegenerateMask";
        case ErrorCode::EmptyBand: return "EmptyBand";
        case ErrorCode::EmptyRegion: return "EmptyRegion";
        case ErrorCode::AllCellsExcluded: return "AllCellsExcluded";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::MissingChannel: return "MissingChannel";
        case ErrorCode::NonFiniteData: return "NonFiniteData";
        case ErrorCode::ConflictingMetadata: return "ConflictingMetadata";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

int exit_code(ErrorCode code) {
    return 3 + static_cast<int>(code);
}

Grid Grid::make(int nx, int ny, double x0, double x1, double y0, double y1) {
    if (nx < 3 || ny < 3)
        raise(ErrorCode::InvalidArgument, "grid needs at least 3 nodes per axis");
    if (!(x1 > x0) || !(y1 > y0))
        raise(ErrorCode::InvalidArgument, "grid extents must satisfy x1 > x0 and y1 > y0");
    const double hx = (x1 - x0) / (nx - 1);
    const double hy = (y1 - y0) / (ny - 1);
    if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
        raise(ErrorCode::InvalidArgument, "grid spacing differs between x and y");
    Grid g;
    g.nx = nx;
    g.ny = ny;
    g.x0 = x0;
    g.x1 = x1;
    g.y0 = y0;
    g.y1 = y1;
    g.h = hx;
    return g;
}

Grid Grid::square(int n, double extent) {
    return make(n, n, 0.0, extent, 0.0, extent);
}

ScalarField ScalarField::make(const Grid& grid, std::vector<double> values,
                              bool allow_nonfinite) {
    if (values.size() != grid.size())
        raise(ErrorCode::ShapeMismatch, "field has " + std::to_string(values.size()) +
                                            " values, grid expects " +
                                            std::to_string(grid.size()));
    if (!allow_nonfinite) {
        for (double v : values)
            if (!std::isfinite(v))
                raise(ErrorCode::NonFiniteData, "field contains NaN or Inf");
    }
    return ScalarField{grid, std::move(values)};
}

ScalarField ScalarField::zeros(const Grid& grid) {
    return ScalarField{grid, std::vector<double>(grid.size(), 0.0)};
}

ScalarField ScalarField::constant(const Grid& grid, double value) {
    ScalarField f{grid, std::vector<double>(grid.size(), value)};
    if (!std::isfinite(value)) raise(ErrorCode::NonFiniteData, "constant is not finite");
    return f;
}

ScalarField ScalarField::from_function(const Grid& grid,
                                       const std::function<double(double, double)>& f) {
    std::vector<double> values(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            values[grid.index(i, j)] = f(grid.x(i), grid.y(j));
    return make(grid, std::move(values));
}

FlowField FlowField::make(ScalarField u, ScalarField v, ScalarField p) {
    if (!(u.grid == v.grid) || !(u.grid == p.grid))
        raise(ErrorCode::ShapeMismatch, "u, v, p must share one grid");
    return FlowField{std::move(u), std::move(v), std::move(p)};
}

FlowField FlowField::zeros(const Grid& grid) {
    return FlowField{ScalarField::zeros(grid), ScalarField::zeros(grid),
                     ScalarField::zeros(grid)};
}

GeometryMask GeometryMask::make(const Grid& grid, std::vector<std::uint8_t> values) {
    if (values.size() != grid.size())
        raise(ErrorCode::ShapeMismatch, "mask size does not match grid");
    for (auto v : values)
        if (v > 1) raise(ErrorCode::InvalidArgument, "mask entries must be 0 or 1");
    return GeometryMask{grid, std::move(values)};
}

SignedDistanceField SignedDistanceField::make(const Grid& grid,
                                              std::vector<double> values) {
    if (values.size() != grid.size())
        raise(ErrorCode::ShapeMismatch, "sdf size does not match grid");
    const double diag = std::hypot(grid.x1 - grid.x0, grid.y1 - grid.y0);
    for (double v : values) {
        if (!std::isfinite(v)) raise(ErrorCode::NonFiniteData, "sdf contains NaN or Inf");
        if (std::abs(v) > diag)
            raise(ErrorCode::InvalidArgument, "sdf magnitude exceeds domain diagonal");
    }
    return SignedDistanceField{grid, std::move(values)};
}

RegionMask RegionMask::make(const Grid& grid, std::vector<std::uint8_t> values) {
    if (values.size() != grid.size())
        raise(ErrorCode::ShapeMismatch, "region mask size does not match grid");
    for (auto v : values)
        if (v > 1) raise(ErrorCode::InvalidArgument, "region mask entries must be 0 or 1");
    return RegionMask{grid, std::move(values)};
}

RegionMask RegionMask::all(const Grid& grid) {
    return RegionMask{grid, std::vector<std::uint8_t>(grid.size(), 1)};
}

std::size_t RegionMask::count() const {
    return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1));
}

Sample Sample::make(std::string id, double re, std::optional<GeometryMask> mask,
                    std::optional<SignedDistanceField> sdf, FlowField truth,
                    std::optional<std::string> category) {
    if (id.empty()) raise(ErrorCode::InvalidArgument, "sample id must be nonempty");
    if (!(re > 0.0)) raise(ErrorCode::InvalidArgument, "sample Re must be positive");
    if (!mask && !sdf)
        raise(ErrorCode::InvalidArgument,
              "sample needs at least one geometry representation");
    if (mask && !(mask->grid == truth.grid()))
        raise(ErrorCode::ShapeMismatch, "mask grid does not match field grid");
    if (sdf && !(sdf->grid == truth.grid()))
        raise(ErrorCode::ShapeMismatch, "sdf grid does not match field grid");
    return Sample{std::move(id), re,       std::move(mask),
                  std::move(sdf), std::move(truth), std::move(category)};
}

ScoreScale ScoreScale::make(double mse_min, double mse_max) {
    if (!(0.0 < mse_min && mse_min < mse_max))
        raise(ErrorCode::InvalidArgument, "score scale requires 0 < mse_min < mse_max");
    return ScoreScale{mse_min, mse_max};
}

EvalConfig EvalConfig::make(double band_lo, double band_hi, double mse_min, double mse_max,
                            int exclusion_halo, Channels channels, bool aggregate_scores) {
    EvalConfig c{band_lo, band_hi, mse_min, mse_max, exclusion_halo, channels,
                 aggregate_scores};
    c.validate();
    return c;
}

void EvalConfig::validate() const {
    if (!(0.0 <= band_lo && band_lo < band_hi))
        raise(ErrorCode::InvalidArgument, "band requires 0 <= band_lo < band_hi");
    if (!(0.0 < mse_min && mse_min < mse_max))
        raise(ErrorCode::InvalidArgument, "config requires 0 < mse_min < mse_max");
    if (exclusion_halo < 0)
        raise(ErrorCode::InvalidArgument, "exclusion halo must be >= 0");
    if (channels.count() == 0)
        raise(ErrorCode::InvalidArgument, "at least one channel must be selected");
}

} // namespace floweval
