#include "floweval/geometry.hpp"

#include "floweval/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace floweval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform of sampled function f: out[q] = min_p (q-p)^2 + f[p].
// Felzenszwalb & Huttenlocher lower-envelope parabola scan; exact in integer
// arithmetic for integer-valued f (our f values are 0 or squared integers).
void dt1d(const std::vector<double>& f, std::vector<double>& out, int n,
          std::vector<int>& v, std::vector<double>& z) {
    const auto intersect = [&](int q, int p) {
        return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    int k = 0;
    bool any = false;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (!any) {
            any = true;
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k; // z[0] = -inf keeps k >= 0
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (!any) {
        std::fill_n(out.begin(), n, kInf);
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double d = double(q) - v[k];
        out[q] = d * d + f[v[k]];
    }
}

// Squared pixel-unit EDT to the nearest seed pixel (seed[i] != 0).
std::vector<double> squared_edt(const std::vector<std::uint8_t>& seed, int nx, int ny) {
    std::vector<double> d(static_cast<std::size_t>(nx) * ny);
    // pass 1: along x, distance to nearest seed in the same row
    for (int j = 0; j < ny; ++j) {
        double run = kInf;
        for (int i = 0; i < nx; ++i) {
            run = seed[std::size_t(j) * nx + i] ? 0.0 : (run + 1.0);
            d[std::size_t(j) * nx + i] = run;
        }
        run = kInf;
        for (int i = nx - 1; i >= 0; --i) {
            run = seed[std::size_t(j) * nx + i] ? 0.0 : (run + 1.0);
            double& cur = d[std::size_t(j) * nx + i];
            cur = std::min(cur, run);
        }
        for (int i = 0; i < nx; ++i) {
            double& cur = d[std::size_t(j) * nx + i];
            if (cur != kInf) cur *= cur;
        }
    }
    // pass 2: along y, parabola envelope over row distances
    std::vector<double> col(ny), out(ny), z(ny + 1);
    std::vector<int> v(ny);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) col[j] = d[std::size_t(j) * nx + i];
        dt1d(col, out, ny, v, z);
        for (int j = 0; j < ny; ++j) d[std::size_t(j) * nx + i] = out[j];
    }
    return d;
}

} // namespace

SignedDistanceField sdf_from_mask(const GeometryMask& mask, bool interface_calibration) {
    const Grid& g = mask.grid;
    const std::size_t n = g.size();
    std::size_t inside = 0;
    for (auto v : mask.values) inside += (v == 0);
    if (inside == 0 || inside == n)
        raise(ErrorCode::DegenerateMask, "mask must contain both phases");

    std::vector<std::uint8_t> inside_seed(n), outside_seed(n);
    for (std::size_t k = 0; k < n; ++k) {
        inside_seed[k] = (mask.values[k] == 0);
        outside_seed[k] = (mask.values[k] == 1);
    }
    const auto d2_to_inside = squared_edt(inside_seed, g.nx, g.ny);
    const auto d2_to_outside = squared_edt(outside_seed, g.nx, g.ny);

    const double shift = interface_calibration ? 0.5 * g.h : 0.0;
    std::vector<double> sdf(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (mask.values[k] == 1)
            sdf[k] = std::sqrt(d2_to_inside[k]) * g.h - shift;
        else
            sdf[k] = -(std::sqrt(d2_to_outside[k]) * g.h - shift);
    }
    return SignedDistanceField::make(g, std::move(sdf));
}

GeometryMask mask_from_sdf(const SignedDistanceField& sdf) {
    std::vector<std::uint8_t> m(sdf.values.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = sdf.values[k] > 0.0 ? 1 : 0;
    return GeometryMask::make(sdf.grid, std::move(m));
}

RegionMask band_mask(const SignedDistanceField& sdf, double lo, double hi) {
    if (!(lo < hi)) raise(ErrorCode::InvalidArgument, "band requires lo < hi");
    std::vector<std::uint8_t> m(sdf.values.size());
    std::size_t count = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        const bool in = lo <= sdf.values[k] && sdf.values[k] <= hi;
        m[k] = in ? 1 : 0;
        count += in;
    }
    if (count == 0) raise(ErrorCode::EmptyBand, "no node falls inside the SDF band");
    return RegionMask::make(sdf.grid, std::move(m));
}

ScalarField eikonal_residual(const SignedDistanceField& sdf) {
    const auto field = ScalarField::make(sdf.grid, sdf.values);
    const Gradient grad = gradient(field);
    std::vector<double> res(sdf.values.size());
    for (std::size_t k = 0; k < res.size(); ++k)
        res[k] = std::abs(std::hypot(grad.x.values[k], grad.y.values[k]) - 1.0);
    return ScalarField::make(sdf.grid, std::move(res));
}

} // namespace floweval
