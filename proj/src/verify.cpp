#include "floweval/verify.hpp"

#include "floweval/calculus.hpp"
#include "floweval/dataset.hpp"
#include "floweval/geometry.hpp"
#include "floweval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace floweval::verify {

GeometryMask random_blob_mask(const Grid& grid, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto uniform = [&] {
        return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    };
    struct Blob {
        double cx, cy, s, a;
    };
    std::vector<Blob> blobs(4);
    const double lx = grid.x1 - grid.x0, ly = grid.y1 - grid.y0;
    for (Blob& b : blobs) {
        b.cx = grid.x0 + uniform() * lx;
        b.cy = grid.y0 + uniform() * ly;
        b.s = (0.08 + 0.25 * uniform()) * std::min(lx, ly);
        b.a = 0.5 + uniform();
    }
    std::vector<double> level(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            double v = 0.0;
            for (const Blob& b : blobs) {
                const double dx = grid.x(i) - b.cx;
                const double dy = grid.y(j) - b.cy;
                v += b.a * std::exp(-(dx * dx + dy * dy) / (b.s * b.s));
            }
            level[grid.index(i, j)] = v;
        }
    // median threshold guarantees both phases
    std::vector<double> sorted = level;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double threshold = sorted[sorted.size() / 2];
    std::vector<std::uint8_t> mask(grid.size());
    for (std::size_t k = 0; k < mask.size(); ++k)
        mask[k] = level[k] > threshold ? 0 : 1; // blob interior = object
    return GeometryMask::make(grid, std::move(mask));
}

SignedDistanceField brute_force_sdf(const GeometryMask& mask,
                                    bool interface_calibration) {
    const Grid& g = mask.grid;
    std::vector<std::pair<int, int>> inside, outside;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            (mask.at(i, j) == 0 ? inside : outside).emplace_back(i, j);
    if (inside.empty() || outside.empty())
        raise(ErrorCode::DegenerateMask, "mask must contain both phases");

    const double shift = interface_calibration ? 0.5 * g.h : 0.0;
    std::vector<double> sdf(g.size());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const auto& opposite = mask.at(i, j) == 1 ? inside : outside;
            long best = std::numeric_limits<long>::max();
            for (const auto& [oi, oj] : opposite) {
                const long di = oi - i, dj = oj - j;
                best = std::min(best, di * di + dj * dj);
            }
            const double d = std::sqrt(static_cast<double>(best)) * g.h - shift;
            sdf[g.index(i, j)] = mask.at(i, j) == 1 ? d : -d;
        }
    return SignedDistanceField::make(g, std::move(sdf));
}

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckResult check_score_anchors() {
    CheckResult r{"score.anchors", true, ""};
    const ScoreScale scale;
    const std::pair<double, double> anchors[] = {
        {1e-6, 100.0}, {1.0, 0.0}, {1e-3, 50.0}, {1e-4, 200.0 / 3.0},
        {0.0, 100.0},  {2.0, 0.0},
    };
    double worst = 0.0;
    for (const auto& [mse, expected] : anchors)
        worst = std::max(worst, std::abs(score(mse, scale) - expected));
    r.pass = worst <= 1e-9;
    r.detail = "max anchor deviation " + fmt(worst);
    return r;
}

CheckResult check_edt_exactness() {
    CheckResult r{"edt.exact", true, ""};
    const Grid grid = Grid::square(32);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const GeometryMask mask = random_blob_mask(grid, seed);
        const SignedDistanceField fast = sdf_from_mask(mask);
        const SignedDistanceField slow = brute_force_sdf(mask);
        for (std::size_t k = 0; k < fast.values.size(); ++k)
            worst = std::max(worst, std::abs(fast.values[k] - slow.values[k]));
    }
    r.pass = worst <= 1e-12;
    r.detail = "max |fast - brute force| = " + fmt(worst) + " over 20 masks";
    return r;
}

CheckResult check_edt_disc() {
    CheckResult r{"edt.disc", true, ""};
    const int n = 129;
    const Grid grid = Grid::make(n, n, 0.0, 2.0, 0.0, 2.0);
    const double radius = 0.5;
    std::vector<std::uint8_t> m(grid.size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m[grid.index(i, j)] =
                std::hypot(grid.x(i) - 1.0, grid.y(j) - 1.0) > radius ? 1 : 0;
    const SignedDistanceField sdf = sdf_from_mask(GeometryMask::make(grid, std::move(m)));
    double worst = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double exact = std::hypot(grid.x(i) - 1.0, grid.y(j) - 1.0) - radius;
            if (std::abs(exact) <= 2.0 * grid.h) continue;
            worst = std::max(worst, std::abs(sdf.at(i, j) - exact));
        }
    r.pass = worst <= grid.h;
    r.detail = "max |sdf - analytic| = " + fmt(worst) + ", h = " + fmt(grid.h);
    return r;
}

double max_abs_diff(const ScalarField& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
        worst = std::max(worst, std::abs(a.values[k] - b[k]));
    return worst;
}

CheckResult check_stencils() {
    CheckResult r{"stencil.convergence", true, ""};
    // quadratic exactness including boundary closures
    {
        const Grid g = Grid::square(17);
        const auto f = ScalarField::from_function(
            g, [](double x, double y) { return x * x + 0.5 * y * y + x * y + 3.0; });
        const Gradient grad = gradient(f);
        std::vector<double> gx(g.size()), gy(g.size()), lap_exact(g.size(), 3.0);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                gx[g.index(i, j)] = 2.0 * g.x(i) + g.y(j);
                gy[g.index(i, j)] = g.y(j) + g.x(i);
            }
        const double e = std::max({max_abs_diff(grad.x, gx), max_abs_diff(grad.y, gy),
                                   max_abs_diff(laplacian(f), lap_exact)});
        if (e > 1e-12) {
            r.pass = false;
            r.detail = "quadratic exactness violated by " + fmt(e);
            return r;
        }
    }
    const auto grad_err = [](int n) {
        const Grid g = Grid::square(n);
        const auto f = ScalarField::from_function(g, [](double x, double y) {
            return std::sin(kPi * x) * std::sin(kPi * y);
        });
        const Gradient grad = gradient(f);
        double worst = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double ex = kPi * std::cos(kPi * g.x(i)) * std::sin(kPi * g.y(j));
                const double ey = kPi * std::sin(kPi * g.x(i)) * std::cos(kPi * g.y(j));
                worst = std::max({worst, std::abs(grad.x.at(i, j) - ex),
                                  std::abs(grad.y.at(i, j) - ey)});
            }
        return worst;
    };
    const auto lap_err = [](int n) {
        const Grid g = Grid::square(n);
        const auto f = ScalarField::from_function(g, [](double x, double y) {
            return std::sin(kPi * x) * std::sin(kPi * y);
        });
        const ScalarField lap = laplacian(f);
        double worst = 0.0;
        for (std::size_t k = 0; k < lap.values.size(); ++k)
            worst = std::max(worst,
                             std::abs(lap.values[k] + 2.0 * kPi * kPi * f.values[k]));
        return worst;
    };
    const double og = std::log2(grad_err(65) / grad_err(129));
    const double ol = std::log2(lap_err(65) / lap_err(129));
    r.pass = og >= 1.9 && og <= 2.1 && ol >= 1.9 && ol <= 2.1;
    r.detail = "gradient order " + fmt(og) + ", laplacian order " + fmt(ol);
    return r;
}

double linear_field_m3(int n) {
    const Grid g = Grid::square(n);
    const FlowField flow = FlowField::make(
        ScalarField::from_function(g, [](double x, double) { return x; }),
        ScalarField::from_function(g, [](double, double y) { return -y; }),
        ScalarField::zeros(g));
    const auto sdf = SignedDistanceField::make(g, std::vector<double>(g.size(), 1.0));
    return m3(flow, 100.0, sdf, EvalConfig{});
}

CheckResult check_residual_integral() {
    CheckResult r{"residual.integral", true, ""};
    const double coarse = linear_field_m3(65);
    const double fine = linear_field_m3(129);
    const double exact = 2.0 / 3.0;
    const double rel = std::abs(fine - exact) / exact;
    const double order = std::log2(std::abs(coarse - exact) / std::abs(fine - exact));
    r.pass = rel <= 0.01 && order >= 1.9;
    r.detail = "m3 = " + fmt(fine) + " (target 2/3, rel err " + fmt(rel) +
               "), order " + fmt(order);
    return r;
}

} // namespace

std::vector<CheckResult> run_checks(const std::string& filter) {
    std::vector<CheckResult> all;
    const auto want = [&](const std::string& name) {
        return filter.empty() || name.find(filter) != std::string::npos;
    };
    if (want("score.anchors")) all.push_back(check_score_anchors());
    if (want("edt.exact")) all.push_back(check_edt_exactness());
    if (want("edt.disc")) all.push_back(check_edt_disc());
    if (want("stencil.convergence")) all.push_back(check_stencils());
    if (want("residual.integral")) all.push_back(check_residual_integral());
    return all;
}

} // namespace floweval::verify
