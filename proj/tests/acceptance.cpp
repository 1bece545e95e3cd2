// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion carries a wall-clock budget that is checked too.

#include "floweval/calculus.hpp"
#include "floweval/dataset.hpp"
#include "floweval/geometry.hpp"
#include "floweval/metrics.hpp"
#include "floweval/npy.hpp"
#include "floweval/report.hpp"
#include "floweval/verify.hpp"

#include "oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace floweval;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    std::string name;
    double budget_seconds;
    std::function<bool(std::string&)> body;
};

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "floweval_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string(FLOWEVAL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---- criterion 1: score anchors ---------------------------------------

bool criterion_score_anchors(std::string& detail) {
    const ScoreScale scale;
    const std::pair<double, double> anchors[] = {
        {1e-6, 100.0}, {1.0, 0.0}, {1e-3, 50.0}, {1e-4, 200.0 / 3.0}};
    double worst = 0.0;
    for (const auto& [mse, expected] : anchors)
        worst = std::max(worst, std::abs(score(mse, scale) - expected));
    detail = "max anchor deviation " + fmt(worst);
    return worst <= 1e-9;
}

// ---- criterion 2: published-table inversion ----------------------------

bool criterion_table_inversion(std::string& detail) {
    std::ifstream f(fs::path(FLOWEVAL_TEST_DATA_DIR) / "reference_scores.csv");
    if (!f) {
        detail = "reference_scores.csv not found";
        return false;
    }
    std::string line;
    std::getline(f, line); // header
    const ScoreScale scale;
    double worst = 0.0;
    std::size_t n = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ','); // model
        std::getline(ss, cell, ','); // representation
        while (std::getline(ss, cell, ',')) {
            const double s = std::stod(cell);
            const double mse = std::pow(10.0, -6.0 * s / 100.0);
            worst = std::max(worst, std::abs(score(mse, scale) - s));
            ++n;
        }
    }
    detail = fmt(double(n), 3) + " published scores, max inversion error " + fmt(worst);
    return n >= 132 && worst <= 0.05;
}

// ---- criterion 3: residual integral ------------------------------------

double linear_m3(int n) {
    const Grid g = Grid::square(n);
    const FlowField f = FlowField::make(
        ScalarField::from_function(g, [](double x, double) { return x; }),
        ScalarField::from_function(g, [](double, double y) { return -y; }),
        ScalarField::zeros(g));
    const auto sdf = SignedDistanceField::make(g, std::vector<double>(g.size(), 1.0));
    return m3(f, 100.0, sdf, EvalConfig{});
}

bool criterion_residual_integral(std::string& detail) {
    const double exact = 2.0 / 3.0;
    const double coarse = linear_m3(65);
    const double fine = linear_m3(257);
    const double rel = std::abs(fine - exact) / exact;
    // two refinement steps between 65^2 and 257^2
    const double order =
        std::log2(std::abs(coarse - exact) / std::abs(fine - exact)) / 2.0;
    detail = "m3(257^2) = " + fmt(fine) + ", rel err " + fmt(rel) + ", order " +
             fmt(order, 4);
    return rel <= 0.01 && order >= 1.9;
}

// ---- criterion 4: stencil convergence and quadratic exactness -----------

bool criterion_stencils(std::string& detail) {
    constexpr double pi = std::numbers::pi;
    const auto grad_err = [&](int n) {
        const Grid g = Grid::square(n);
        const auto f = ScalarField::from_function(g, [&](double x, double y) {
            return std::sin(pi * x) * std::sin(pi * y);
        });
        const Gradient d = gradient(f);
        double worst = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double ex = pi * std::cos(pi * g.x(i)) * std::sin(pi * g.y(j));
                const double ey = pi * std::sin(pi * g.x(i)) * std::cos(pi * g.y(j));
                worst = std::max({worst, std::abs(d.x.at(i, j) - ex),
                                  std::abs(d.y.at(i, j) - ey)});
            }
        return worst;
    };
    const auto lap_err = [&](int n) {
        const Grid g = Grid::square(n);
        const auto f = ScalarField::from_function(g, [&](double x, double y) {
            return std::sin(pi * x) * std::sin(pi * y);
        });
        const ScalarField lap = laplacian(f);
        double worst = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            worst = std::max(worst, std::abs(lap.values[k] + 2.0 * pi * pi * f.values[k]));
        return worst;
    };
    const double og = std::log2(grad_err(65) / grad_err(129));
    const double ol = std::log2(lap_err(65) / lap_err(129));

    // degree-2 exactness, domain boundary included
    const Grid g = Grid::make(33, 33, 0, 1, 0, 1);
    const auto q = ScalarField::from_function(
        g, [](double x, double y) { return 2.0 * x * x - x * y + 0.5 * y * y + x - 3.0; });
    const Gradient dq = gradient(q);
    const ScalarField lq = laplacian(q);
    double exact_err = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            exact_err = std::max({exact_err, std::abs(dq.x.at(i, j) - (4.0 * x - y + 1.0)),
                                  std::abs(dq.y.at(i, j) - (-x + y)),
                                  std::abs(lq.at(i, j) - 5.0)});
        }
    detail = "orders: gradient " + fmt(og, 4) + ", laplacian " + fmt(ol, 4) +
             "; quadratic max error " + fmt(exact_err);
    return og >= 1.9 && og <= 2.1 && ol >= 1.9 && ol <= 2.1 && exact_err <= 1e-12;
}

// ---- criterion 5: EDT exactness -----------------------------------------

bool criterion_edt(std::string& detail) {
    const Grid g = Grid::square(64);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const GeometryMask mask = verify::random_blob_mask(g, seed);
        const auto fast = sdf_from_mask(mask);
        const auto slow = oracles::brute_sdf(mask);
        for (std::size_t k = 0; k < fast.values.size(); ++k)
            worst = std::max(worst, std::abs(fast.values[k] - slow.values[k]));
        if (worst > 1e-12) break;
    }

    const int n = 257;
    const Grid gd = Grid::make(n, n, 0, 2, 0, 2);
    std::vector<std::uint8_t> m(gd.size());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            m[gd.index(i, j)] = std::hypot(gd.x(i) - 1.0, gd.y(j) - 1.0) > 0.5 ? 1 : 0;
    const auto sdf = sdf_from_mask(GeometryMask::make(gd, std::move(m)));
    double disc_worst = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double exact = std::hypot(gd.x(i) - 1.0, gd.y(j) - 1.0) - 0.5;
            if (std::abs(exact) <= 2.0 * gd.h) continue;
            disc_worst = std::max(disc_worst, std::abs(sdf.at(i, j) - exact));
        }
    detail = "200 blob masks: max |sdf - oracle| = " + fmt(worst) +
             "; disc: max |sdf - analytic| = " + fmt(disc_worst) + " (h = " +
             fmt(gd.h, 4) + ")";
    return worst <= 1e-12 && disc_worst <= gd.h;
}

// ---- criterion 6: metric regions and hand examples ----------------------

bool criterion_regions(std::string& detail) {
    // four-pixel single-channel example carried on a 3x3 grid via masking
    const Grid g = Grid::square(3);
    const Channels u_only{true, false, false};
    FlowField truth = FlowField::zeros(g);
    truth.u.at(0, 0) = 9.0;
    truth.u.at(1, 0) = 1.0;
    truth.u.at(0, 1) = 1.0;
    truth.u.at(1, 1) = 1.0;
    std::vector<std::uint8_t> inc(9, 0);
    for (const auto [i, j] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}})
        inc[g.index(i, j)] = 1;
    const double mse_all =
        mse_masked(FlowField::zeros(g), truth, RegionMask::make(g, inc), u_only);
    inc[g.index(0, 0)] = 0;
    const double mse_cut =
        mse_masked(FlowField::zeros(g), truth, RegionMask::make(g, inc), u_only);

    // 3x3 m1 with a single geometry pixel
    std::vector<double> sdf1(9, 0.5);
    sdf1[g.index(1, 1)] = -0.5;
    FlowField ones = FlowField::zeros(g);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            if (!(i == 1 && j == 1)) ones.u.at(i, j) = 1.0;
    EvalConfig cfg_u;
    cfg_u.channels = u_only;
    const double m1_hand = m1(FlowField::zeros(g), ones,
                              SignedDistanceField::make(g, sdf1), cfg_u);

    // banded m2 example
    std::vector<double> sdf2(9, 0.9);
    sdf2[g.index(0, 0)] = 0.1;
    sdf2[g.index(1, 0)] = 0.25;
    sdf2[g.index(0, 1)] = 0.15;
    sdf2[g.index(1, 1)] = 0.05;
    FlowField banded = FlowField::zeros(g);
    banded.u.at(0, 0) = 2.0;
    banded.u.at(1, 0) = 10.0;
    banded.u.at(0, 1) = 3.0;
    banded.u.at(1, 1) = 4.0;
    const double m2_hand = m2(FlowField::zeros(g), banded,
                              SignedDistanceField::make(g, sdf2), cfg_u);

    const bool hand_ok = mse_all == 21.0 && mse_cut == 1.0 && m1_hand == 1.0 &&
                         std::abs(m2_hand - 29.0 / 3.0) <= 1e-13;

    // region nesting across a processed dataset
    bool nested = true;
    const Grid gb = Grid::square(64);
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
        const auto sdf = sdf_from_mask(verify::random_blob_mask(gb, seed));
        const RegionMask r1 = m1_region(sdf);
        const RegionMask r2 = m2_region(sdf, EvalConfig{});
        for (std::size_t k = 0; k < gb.size(); ++k)
            if (r2.values[k] && !r1.values[k]) nested = false;
    }
    detail = std::string("hand examples ") + (hand_ok ? "exact" : "WRONG") +
             "; band region nested in fluid region on 20 samples: " +
             (nested ? "yes" : "no");
    return hand_ok && nested;
}

// ---- criterion 7: split protocol -----------------------------------------

bool criterion_splits(std::string& detail) {
    // the published Re design: 300 geometries x (5 draws in [10,100] + 5 in
    // [100,1000])
    const Grid g = Grid::square(4);
    const auto sdf = SignedDistanceField::make(
        g, ScalarField::from_function(g, [](double, double y) { return y + 0.05; }).values);
    oracles::Rng rng(2024);
    std::vector<Sample> samples;
    for (int geo = 0; geo < 300; ++geo)
        for (int k = 0; k < 10; ++k) {
            const double re = k < 5 ? 10.0 + 90.0 * rng.uniform()
                                    : 100.0 + 900.0 * rng.uniform();
            char id[32];
            std::snprintf(id, sizeof id, "g%03d_r%d", geo, k);
            samples.push_back(
                Sample::make(id, re, std::nullopt, sdf, FlowField::zeros(g)));
        }
    const Dataset ds = Dataset::make(std::move(samples), {"synthetic-3000", "memory"});

    const SplitResult rnd = random_split(ds, 0.2, 7);
    if (rnd.train_ids.size() != 2400 || rnd.test_ids.size() != 600) {
        detail = "random split produced " + std::to_string(rnd.train_ids.size()) + "/" +
                 std::to_string(rnd.test_ids.size());
        return false;
    }

    const SplitResult ex = extrapolatory_split(ds, 0.1);
    double train_lo = 1e300, train_hi = -1e300;
    for (const auto& id : ex.train_ids) {
        train_lo = std::min(train_lo, ds.find(id)->re);
        train_hi = std::max(train_hi, ds.find(id)->re);
    }
    bool tails_outside = true;
    for (const auto& id : ex.test_ids) {
        const double re = ds.find(id)->re;
        if (re >= train_lo && re <= train_hi) tails_outside = false;
    }

    bool subsets_ok = true;
    const fs::path dir = work_dir() / "splits";
    fs::create_directories(dir);
    for (const std::size_t n_train : {1200, 800, 400, 240}) {
        const SplitResult sub = subsample(rnd, n_train, 11);
        subsets_ok = subsets_ok && sub.train_ids.size() == n_train &&
                     sub.test_ids == rnd.test_ids;
        const fs::path p1 = dir / (std::to_string(n_train) + "_a.json");
        const fs::path p2 = dir / (std::to_string(n_train) + "_b.json");
        save_split(p1, sub);
        save_split(p2, subsample(rnd, n_train, 11));
        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        const std::string b1((std::istreambuf_iterator<char>(f1)), {});
        const std::string b2((std::istreambuf_iterator<char>(f2)), {});
        subsets_ok = subsets_ok && !b1.empty() && b1 == b2;
    }
    detail = "random 2400/600; extrapolatory tails " +
             std::string(tails_outside ? "outside" : "INSIDE") + " train Re [" +
             fmt(train_lo, 4) + ", " + fmt(train_hi, 4) + "]; subsets " +
             (subsets_ok ? "fixed-test and byte-stable" : "BROKEN");
    return tails_outside && subsets_ok;
}

// ---- criterion 8: manufactured end-to-end through the CLI ----------------

bool criterion_manufactured_cli(std::string& detail) {
    const fs::path dir = work_dir() / "manufactured";
    fs::create_directories(dir);

    // radial-disc dataset with a zero prediction
    const Grid g = Grid::make(513, 513, 0, 1, 0, 1);
    std::vector<Sample> samples;
    PredictionSet zeros;
    std::vector<ManufacturedSample> made;
    for (int k = 0; k < 2; ++k) {
        auto ms = manufactured_sample(ManufacturedKind::RadialDisc, g, 100.0 + 400.0 * k,
                                      EvalConfig{});
        ms.sample.id = "disc" + std::to_string(k);
        zeros.ids.push_back(ms.sample.id);
        zeros.fields.push_back(FlowField::zeros(g));
        samples.push_back(ms.sample);
        made.push_back(std::move(ms));
    }
    write_archive(dir / "disc.zip", Dataset::make(samples, {"disc", "memory"}));
    write_predictions(dir / "zeros.zip", zeros, g);

    const fs::path report_path = dir / "disc_report.json";
    if (run_cli("evaluate --data " + (dir / "disc.zip").string() + " --pred " +
                    (dir / "zeros.zip").string() + " --out " + report_path.string(),
                dir / "disc.log") != 0) {
        detail = "cmd_evaluate failed on the disc dataset";
        return false;
    }
    const EvalReport rep = load_report(report_path);
    const double want_m1 = made[0].m1_zero_pred; // identical fields for both Re
    const double want_m2 = made[0].m2_zero_pred;
    const double rel1 = std::abs(rep.metrics.m1_mse - want_m1) / want_m1;
    const double rel2 = std::abs(rep.metrics.m2_mse - want_m2) / want_m2;
    const bool disc_ok =
        rel1 <= 0.005 && rel2 <= 0.005 && rep.metrics.m2_mse < rep.metrics.m1_mse;

    // the closed-form annulus mean is resolution-independent; check it too
    const double rel2_limit =
        std::abs(rep.metrics.m2_mse - *made[0].m2_zero_pred_limit) /
        *made[0].m2_zero_pred_limit;

    // polynomial-shear truth against itself
    const Grid gs = Grid::make(65, 65, 0, 1, 0, 1);
    auto shear = manufactured_sample(ManufacturedKind::PolynomialShear, gs, 1000.0,
                                     EvalConfig{});
    PredictionSet self;
    self.ids.push_back(shear.sample.id);
    self.fields.push_back(shear.sample.truth);
    write_archive(dir / "shear.zip",
                  Dataset::make({shear.sample}, {"shear", "memory"}));
    write_predictions(dir / "self.zip", self, gs);
    const fs::path shear_report = dir / "shear_report.json";
    if (run_cli("evaluate --data " + (dir / "shear.zip").string() + " --pred " +
                    (dir / "self.zip").string() + " --out " + shear_report.string(),
                dir / "shear.log") != 0) {
        detail = "cmd_evaluate failed on the shear dataset";
        return false;
    }
    const EvalReport shear_rep = load_report(shear_report);
    const bool shear_ok = shear_rep.metrics.m3_raw <= 1e-10;

    detail = "disc m1 rel err " + fmt(rel1) + ", m2 rel err " + fmt(rel2) +
             " (vs closed form " + fmt(rel2_limit) + "), m2 < m1 " +
             (rep.metrics.m2_mse < rep.metrics.m1_mse ? "yes" : "NO") +
             "; shear self m3 = " + fmt(shear_rep.metrics.m3_raw);
    return disc_ok && rel2_limit <= 0.005 && shear_ok;
}

// ---- criterion 9: determinism across job counts --------------------------

bool criterion_determinism(std::string& detail) {
    const fs::path dir = work_dir() / "determinism";
    fs::create_directories(dir);
    const Grid g = Grid::make(33, 33, 0, 1, 0, 1);
    std::vector<Sample> samples;
    PredictionSet preds;
    for (int k = 0; k < 100; ++k) {
        auto ms = manufactured_sample(ManufacturedKind::RadialDisc, g, 10.0 + 9.9 * k,
                                      EvalConfig{});
        ms.sample.id = "d" + std::to_string(k);
        preds.ids.push_back(ms.sample.id);
        preds.fields.push_back(ms.sample.truth); // self-prediction
        samples.push_back(std::move(ms.sample));
    }
    write_archive(dir / "data.zip", Dataset::make(samples, {"det", "memory"}));
    write_predictions(dir / "preds.zip", preds, g);

    const std::string common = "evaluate --data " + (dir / "data.zip").string() +
                               " --pred " + (dir / "preds.zip").string();
    if (run_cli(common + " --jobs 1 --out " + (dir / "j1.json").string(),
                dir / "j1.log") != 0 ||
        run_cli(common + " --jobs 8 --out " + (dir / "j8.json").string(),
                dir / "j8.log") != 0) {
        detail = "cmd_evaluate failed";
        return false;
    }
    std::ifstream f1(dir / "j1.json", std::ios::binary);
    std::ifstream f8(dir / "j8.json", std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b8((std::istreambuf_iterator<char>(f8)), {});
    detail = "reports of 100 samples: " +
             std::string(b1 == b8 && !b1.empty() ? "bit-identical" : "DIFFER") +
             " for --jobs 1 vs --jobs 8";
    return !b1.empty() && b1 == b8;
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"1 score anchors", 1.0, criterion_score_anchors},
        {"2 published-table inversion", 1.0, criterion_table_inversion},
        {"3 residual integral 2/3", 10.0, criterion_residual_integral},
        {"4 stencil convergence", 5.0, criterion_stencils},
        {"5 exact distance transform", 30.0, criterion_edt},
        {"6 metric regions", 1.0, criterion_regions},
        {"7 split protocol", 5.0, criterion_splits},
        {"8 manufactured end-to-end", 30.0, criterion_manufactured_cli},
        {"9 determinism across jobs", 30.0, criterion_determinism},
    };

    bool all_pass = true;
    for (const Criterion& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool pass = false;
        try {
            pass = c.body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = elapsed <= c.budget_seconds;
        pass = pass && in_budget;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.name << " [" << fmt(elapsed, 3)
                  << " s / budget " << fmt(c.budget_seconds, 3) << " s]: " << detail
                  << "\n";
        all_pass = all_pass && pass;
    }
    return all_pass ? 0 : 1;
}
