#include "floweval/geometry.hpp"
#include "floweval/verify.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace floweval;

namespace {

GeometryMask disc_mask(const Grid& g, double cx, double cy, double radius) {
    std::vector<std::uint8_t> m(g.size());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            m[g.index(i, j)] = std::hypot(g.x(i) - cx, g.y(j) - cy) > radius ? 1 : 0;
    return GeometryMask::make(g, std::move(m));
}

} // namespace

TEST_CASE("single interior pixel gets sdf -h/2") {
    const Grid g = Grid::make(5, 5, 0, 4, 0, 4); // h = 1
    std::vector<std::uint8_t> m(25, 1);
    m[g.index(2, 2)] = 0;
    const auto sdf = sdf_from_mask(GeometryMask::make(g, std::move(m)));
    CHECK(sdf.at(2, 2) == doctest::Approx(-0.5).epsilon(1e-14));
    // 4-neighbours sit half a cell outside
    CHECK(sdf.at(1, 2) == doctest::Approx(0.5).epsilon(1e-14));
    // diagonal neighbour: sqrt(2) - 1/2
    CHECK(sdf.at(1, 1) == doctest::Approx(std::sqrt(2.0) - 0.5).epsilon(1e-14));
}

TEST_CASE("degenerate masks are rejected") {
    const Grid g = Grid::square(4);
    CHECK_THROWS_AS(sdf_from_mask(GeometryMask::make(g, std::vector<std::uint8_t>(16, 1))),
                    Error);
    CHECK_THROWS_AS(sdf_from_mask(GeometryMask::make(g, std::vector<std::uint8_t>(16, 0))),
                    Error);
    try {
        sdf_from_mask(GeometryMask::make(g, std::vector<std::uint8_t>(16, 1)));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateMask);
    }
}

TEST_CASE("disc sdf tracks the analytic distance within h") {
    const Grid g = Grid::make(257, 257, 0, 2, 0, 2);
    const auto sdf = sdf_from_mask(disc_mask(g, 1.0, 1.0, 0.5));
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double exact = std::hypot(g.x(i) - 1.0, g.y(j) - 1.0) - 0.5;
            if (std::abs(exact) <= 2.0 * g.h) continue;
            worst = std::max(worst, std::abs(sdf.at(i, j) - exact));
        }
    CHECK(worst <= g.h);
}

TEST_CASE("sdf matches the all-pairs oracle on random blobs") {
    const Grid g = Grid::square(48);
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const GeometryMask mask = verify::random_blob_mask(g, seed);
        const auto fast = sdf_from_mask(mask);
        const auto slow = oracles::brute_sdf(mask);
        for (std::size_t k = 0; k < fast.values.size(); ++k)
            REQUIRE(std::abs(fast.values[k] - slow.values[k]) <= 1e-12);
        // raw (uncalibrated) flavor agrees as well
        const auto fast_raw = sdf_from_mask(mask, false);
        const auto slow_raw = oracles::brute_sdf(mask, false);
        for (std::size_t k = 0; k < fast_raw.values.size(); ++k)
            REQUIRE(std::abs(fast_raw.values[k] - slow_raw.values[k]) <= 1e-12);
    }
}

TEST_CASE("sign agrees with the mask beyond h/2") {
    const Grid g = Grid::square(48);
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        const GeometryMask mask = verify::random_blob_mask(g, seed);
        const auto sdf = sdf_from_mask(mask);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double unsigned_edt = std::abs(sdf.at(i, j)) + 0.5 * g.h;
                if (unsigned_edt <= 0.5 * g.h) continue;
                if (mask.at(i, j) == 1)
                    CHECK(sdf.at(i, j) > 0.0);
                else
                    CHECK(sdf.at(i, j) < 0.0);
            }
    }
}

TEST_CASE("mask_from_sdf thresholds at zero, boundary counts as inside") {
    const Grid g = Grid::square(3);
    auto positive = SignedDistanceField::make(g, std::vector<double>(9, 0.25));
    for (auto v : mask_from_sdf(positive).values) CHECK(v == 1);

    std::vector<double> vals(9, 0.25);
    vals[4] = 0.0;
    vals[5] = -0.1;
    const auto mask = mask_from_sdf(SignedDistanceField::make(g, vals));
    CHECK(mask.values[4] == 0); // exact zero is inside
    CHECK(mask.values[5] == 0);
    CHECK(mask.values[0] == 1);
}

TEST_CASE("mask -> sdf -> mask is the identity away from the interface") {
    const Grid g = Grid::square(64);
    for (std::uint64_t seed = 50; seed < 58; ++seed) {
        const GeometryMask mask = verify::random_blob_mask(g, seed);
        const auto sdf = sdf_from_mask(mask);
        const GeometryMask back = mask_from_sdf(sdf);
        for (std::size_t k = 0; k < mask.values.size(); ++k)
            if (std::abs(sdf.values[k]) > g.h) CHECK(back.values[k] == mask.values[k]);
    }
}

TEST_CASE("band_mask hand example") {
    // the 2x2 sdf [[0.1, 0.25], [0.15, 0.05]] embedded in a 3x3 grid whose
    // remaining nodes sit far outside the band
    const Grid g = Grid::square(3);
    std::vector<double> sdf(9, 0.9);
    sdf[g.index(0, 0)] = 0.1;
    sdf[g.index(1, 0)] = 0.25;
    sdf[g.index(0, 1)] = 0.15;
    sdf[g.index(1, 1)] = 0.05;
    const auto band = band_mask(SignedDistanceField::make(g, sdf), 0.0, 0.2);
    CHECK(band.at(0, 0) == 1);
    CHECK(band.at(1, 0) == 0); // 0.25 is outside
    CHECK(band.at(0, 1) == 1);
    CHECK(band.at(1, 1) == 1);
    CHECK(band.count() == 3);
}

TEST_CASE("band_mask limit and degenerate cases") {
    const Grid g = Grid::square(4);
    std::vector<double> vals(16);
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = -0.5 + 0.1 * double(k % 7);
    const auto sdf = SignedDistanceField::make(g, vals);

    const double inf = std::numeric_limits<double>::infinity();
    const auto fluid = band_mask(sdf, 0.0, inf);
    for (std::size_t k = 0; k < vals.size(); ++k)
        CHECK(fluid.values[k] == (vals[k] >= 0.0 ? 1 : 0));

    const auto interior = SignedDistanceField::make(g, std::vector<double>(16, -0.3));
    CHECK_THROWS_AS(band_mask(interior, 0.0, 0.2), Error);
    try {
        band_mask(interior, 0.0, 0.2);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyBand);
    }
}

TEST_CASE("band nesting is monotone in the upper bound") {
    const Grid g = Grid::square(32);
    const auto sdf = sdf_from_mask(verify::random_blob_mask(g, 7));
    const auto narrow = band_mask(sdf, 0.0, 0.1);
    const auto wide = band_mask(sdf, 0.0, 0.3);
    for (std::size_t k = 0; k < narrow.values.size(); ++k)
        if (narrow.values[k]) CHECK(wide.values[k] == 1);
}

TEST_CASE("eikonal residual vanishes for a planar sdf") {
    const Grid g = Grid::make(17, 17, 0, 2, 0, 2);
    const auto planar = SignedDistanceField::make(
        g, ScalarField::from_function(g, [](double x, double) { return x - 1.0; }).values);
    for (double r : eikonal_residual(planar).values) CHECK(r <= 1e-12);
}

TEST_CASE("eikonal residual of the analytic disc decays at second order") {
    // away from the centre kink the truncation error is O(h^2); the residual
    // cannot reach 1e-10 near the centre where |f'''| ~ 1/r^2 blows up
    const auto max_residual_beyond = [](int n, double rad) {
        const Grid g = Grid::make(n, n, 0, 2, 0, 2);
        const auto sdf = SignedDistanceField::make(
            g, ScalarField::from_function(g, [](double x, double y) {
                   return std::hypot(x - 1.0, y - 1.0) - 0.5;
               }).values);
        const auto res = eikonal_residual(sdf);
        double worst = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (std::hypot(g.x(i) - 1.0, g.y(j) - 1.0) > rad)
                    worst = std::max(worst, res.at(i, j));
        return worst;
    };
    const double coarse = max_residual_beyond(129, 0.2);
    const double fine = max_residual_beyond(257, 0.2);
    CHECK(fine <= 2e-3);
    CHECK(std::log2(coarse / fine) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("eikonal residual of the transformed disc mask is small off-interface") {
    const Grid g = Grid::make(257, 257, 0, 2, 0, 2);
    const auto sdf = sdf_from_mask(disc_mask(g, 1.0, 1.0, 0.5));
    const auto res = eikonal_residual(sdf);
    std::size_t total = 0, good = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double r = std::hypot(g.x(i) - 1.0, g.y(j) - 1.0);
            if (r <= 2.0 * g.h || std::abs(r - 0.5) <= 2.0 * g.h) continue;
            ++total;
            good += res.at(i, j) <= 0.05;
        }
    CHECK(double(good) / double(total) >= 0.99);
}
