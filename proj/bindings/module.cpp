#include "floweval/calculus.hpp"
#include "floweval/dataset.hpp"
#include "floweval/geometry.hpp"
#include "floweval/metrics.hpp"
#include "floweval/types.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

namespace py = pybind11;
using namespace floweval;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> field_values(const Grid& grid, const DoubleArray& array,
                                 const char* name) {
    if (array.ndim() != 2 || array.shape(0) != grid.ny || array.shape(1) != grid.nx)
        raise(ErrorCode::ShapeMismatch,
              std::string(name) + " must have shape (ny, nx) = (" +
                  std::to_string(grid.ny) + ", " + std::to_string(grid.nx) + ")");
    const double* data = array.data();
    return {data, data + grid.size()};
}

ScalarField scalar_field(const Grid& grid, const DoubleArray& array, const char* name,
                         bool allow_nonfinite = false) {
    return ScalarField::make(grid, field_values(grid, array, name), allow_nonfinite);
}

FlowField flow_field(const Grid& grid, const DoubleArray& u, const DoubleArray& v,
                     const DoubleArray& p) {
    return FlowField::make(scalar_field(grid, u, "u"), scalar_field(grid, v, "v"),
                           scalar_field(grid, p, "p"));
}

py::array_t<double> to_array(const Grid& grid, const std::vector<double>& values) {
    py::array_t<double> out({grid.ny, grid.nx});
    std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(double));
    return out;
}

py::array_t<std::uint8_t> to_u8_array(const Grid& grid,
                                      const std::vector<std::uint8_t>& values) {
    py::array_t<std::uint8_t> out({grid.ny, grid.nx});
    std::memcpy(out.mutable_data(), values.data(), values.size());
    return out;
}

GeometryMask mask_from_array(const Grid& grid, const DoubleArray& array) {
    const auto values = field_values(grid, array, "mask");
    std::vector<std::uint8_t> m(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] == 0.0)
            m[k] = 0;
        else if (values[k] == 1.0)
            m[k] = 1;
        else
            raise(ErrorCode::InvalidArgument, "mask entries must be 0 or 1");
    }
    return GeometryMask::make(grid, std::move(m));
}

// throwaway dataset so the split operations can run on plain id/Re lists
Dataset ids_dataset(const std::vector<std::string>& ids, const std::vector<double>& res) {
    if (ids.size() != res.size())
        raise(ErrorCode::LengthMismatch, "ids and res must have equal length");
    const Grid g = Grid::square(3);
    const auto sdf = SignedDistanceField::make(g, std::vector<double>(g.size(), 0.5));
    std::vector<Sample> samples;
    for (std::size_t k = 0; k < ids.size(); ++k)
        samples.push_back(Sample::make(ids[k], res[k], std::nullopt, sdf,
                                       FlowField::zeros(g)));
    return Dataset::make(std::move(samples), {"python", "memory"});
}

py::dict report_dict(const MetricReport& rep) {
    py::dict d;
    d["m1_mse"] = rep.m1_mse;
    d["m2_mse"] = rep.m2_mse;
    d["m3_raw"] = rep.m3_raw;
    d["m1_score"] = rep.m1_score;
    d["m2_score"] = rep.m2_score;
    d["m3_score"] = rep.m3_score;
    d["n_samples"] = rep.n_samples;
    return d;
}

} // namespace

PYBIND11_MODULE(_floweval, m) {
    m.doc() = "Metrics for predicted steady incompressible-flow fields: global and "
              "boundary-layer accuracy plus momentum-residual consistency, with "
              "mask/SDF geometry handling and deterministic splits.";

    py::register_exception<Error>(m, "FlowEvalError");

    py::class_<Grid>(m, "Grid")
        .def(py::init([](int nx, int ny, double x0, double x1, double y0, double y1) {
                 return Grid::make(nx, ny, x0, x1, y0, y1);
             }),
             py::arg("nx"), py::arg("ny"), py::arg("x0") = 0.0, py::arg("x1") = 1.0,
             py::arg("y0") = 0.0, py::arg("y1") = 1.0)
        .def_static("square", &Grid::square, py::arg("n"), py::arg("extent") = 1.0)
        .def_readonly("nx", &Grid::nx)
        .def_readonly("ny", &Grid::ny)
        .def_readonly("x0", &Grid::x0)
        .def_readonly("x1", &Grid::x1)
        .def_readonly("y0", &Grid::y0)
        .def_readonly("y1", &Grid::y1)
        .def_readonly("h", &Grid::h)
        .def("__repr__", [](const Grid& g) {
            return "Grid(" + std::to_string(g.nx) + "x" + std::to_string(g.ny) + ", [" +
                   std::to_string(g.x0) + "," + std::to_string(g.x1) + "]x[" +
                   std::to_string(g.y0) + "," + std::to_string(g.y1) + "])";
        });

    py::class_<EvalConfig>(m, "EvalConfig")
        .def(py::init([](double band_lo, double band_hi, double mse_min, double mse_max,
                         int exclusion_halo, bool include_pressure) {
                 EvalConfig c;
                 c.band_lo = band_lo;
                 c.band_hi = band_hi;
                 c.mse_min = mse_min;
                 c.mse_max = mse_max;
                 c.exclusion_halo = exclusion_halo;
                 c.channels.p = include_pressure;
                 c.validate();
                 return c;
             }),
             py::arg("band_lo") = 0.0, py::arg("band_hi") = 0.2,
             py::arg("mse_min") = 1e-6, py::arg("mse_max") = 1.0,
             py::arg("exclusion_halo") = 1, py::arg("include_pressure") = true)
        .def_readwrite("band_lo", &EvalConfig::band_lo)
        .def_readwrite("band_hi", &EvalConfig::band_hi)
        .def_readwrite("mse_min", &EvalConfig::mse_min)
        .def_readwrite("mse_max", &EvalConfig::mse_max)
        .def_readwrite("exclusion_halo", &EvalConfig::exclusion_halo);

    m.def(
        "score",
        [](double mse, double mse_min, double mse_max) {
            return score(mse, ScoreScale::make(mse_min, mse_max));
        },
        py::arg("mse"), py::arg("mse_min") = 1e-6, py::arg("mse_max") = 1.0,
        "Unified 0-100 score of an MSE-like value on the log scale.");

    m.def(
        "sdf_from_mask",
        [](const Grid& grid, const DoubleArray& mask, bool calibrate) {
            return to_array(grid,
                            sdf_from_mask(mask_from_array(grid, mask), calibrate).values);
        },
        py::arg("grid"), py::arg("mask"), py::arg("calibrate") = true,
        "Exact signed Euclidean distance transform of a 0/1 occupancy mask.");

    m.def(
        "mask_from_sdf",
        [](const Grid& grid, const DoubleArray& sdf) {
            return to_u8_array(
                grid, mask_from_sdf(SignedDistanceField::make(
                                        grid, field_values(grid, sdf, "sdf")))
                          .values);
        },
        py::arg("grid"), py::arg("sdf"));

    m.def(
        "band_mask",
        [](const Grid& grid, const DoubleArray& sdf, double lo, double hi) {
            return to_u8_array(grid,
                               band_mask(SignedDistanceField::make(
                                             grid, field_values(grid, sdf, "sdf")),
                                         lo, hi)
                                   .values);
        },
        py::arg("grid"), py::arg("sdf"), py::arg("lo") = 0.0, py::arg("hi") = 0.2);

    m.def(
        "eikonal_residual",
        [](const Grid& grid, const DoubleArray& sdf) {
            return to_array(grid,
                            eikonal_residual(SignedDistanceField::make(
                                                 grid, field_values(grid, sdf, "sdf")))
                                .values);
        },
        py::arg("grid"), py::arg("sdf"));

    m.def(
        "gradient",
        [](const Grid& grid, const DoubleArray& f) {
            const Gradient g = gradient(scalar_field(grid, f, "f"));
            return py::make_tuple(to_array(grid, g.x.values), to_array(grid, g.y.values));
        },
        py::arg("grid"), py::arg("f"),
        "Second-order (fx, fy) with one-sided closures at the domain boundary.");

    m.def(
        "laplacian",
        [](const Grid& grid, const DoubleArray& f) {
            return to_array(grid, laplacian(scalar_field(grid, f, "f")).values);
        },
        py::arg("grid"), py::arg("f"));

    m.def(
        "momentum_residual",
        [](const Grid& grid, const DoubleArray& u, const DoubleArray& v,
           const DoubleArray& p, double re) {
            const auto [rx, ry] =
                momentum_residual(flow_field(grid, u, v, p), re, EvalConfig{});
            return py::make_tuple(to_array(grid, rx.values), to_array(grid, ry.values));
        },
        py::arg("grid"), py::arg("u"), py::arg("v"), py::arg("p"), py::arg("re"),
        "Steady momentum residuals (r_x, r_y) with eta = 1/Re.");

    m.def(
        "m1",
        [](const Grid& grid, const DoubleArray& pu, const DoubleArray& pv,
           const DoubleArray& pp, const DoubleArray& tu, const DoubleArray& tv,
           const DoubleArray& tp, const DoubleArray& sdf, const EvalConfig& config) {
            return m1(flow_field(grid, pu, pv, pp), flow_field(grid, tu, tv, tp),
                      SignedDistanceField::make(grid, field_values(grid, sdf, "sdf")),
                      config);
        },
        py::arg("grid"), py::arg("pred_u"), py::arg("pred_v"), py::arg("pred_p"),
        py::arg("true_u"), py::arg("true_v"), py::arg("true_p"), py::arg("sdf"),
        py::arg("config") = EvalConfig{});

    m.def(
        "m2",
        [](const Grid& grid, const DoubleArray& pu, const DoubleArray& pv,
           const DoubleArray& pp, const DoubleArray& tu, const DoubleArray& tv,
           const DoubleArray& tp, const DoubleArray& sdf, const EvalConfig& config) {
            return m2(flow_field(grid, pu, pv, pp), flow_field(grid, tu, tv, tp),
                      SignedDistanceField::make(grid, field_values(grid, sdf, "sdf")),
                      config);
        },
        py::arg("grid"), py::arg("pred_u"), py::arg("pred_v"), py::arg("pred_p"),
        py::arg("true_u"), py::arg("true_v"), py::arg("true_p"), py::arg("sdf"),
        py::arg("config") = EvalConfig{});

    m.def(
        "m3",
        [](const Grid& grid, const DoubleArray& pu, const DoubleArray& pv,
           const DoubleArray& pp, double re, const DoubleArray& sdf,
           const EvalConfig& config) {
            return m3(flow_field(grid, pu, pv, pp), re,
                      SignedDistanceField::make(grid, field_values(grid, sdf, "sdf")),
                      config);
        },
        py::arg("grid"), py::arg("pred_u"), py::arg("pred_v"), py::arg("pred_p"),
        py::arg("re"), py::arg("sdf"), py::arg("config") = EvalConfig{});

    m.def(
        "evaluate_sample",
        [](const Grid& grid, const DoubleArray& pu, const DoubleArray& pv,
           const DoubleArray& pp, const DoubleArray& tu, const DoubleArray& tv,
           const DoubleArray& tp, const DoubleArray& sdf, double re,
           const EvalConfig& config) {
            const Sample sample = Sample::make(
                "py", re, std::nullopt,
                SignedDistanceField::make(grid, field_values(grid, sdf, "sdf")),
                flow_field(grid, tu, tv, tp));
            return report_dict(evaluate_sample(flow_field(grid, pu, pv, pp), sample,
                                               config));
        },
        py::arg("grid"), py::arg("pred_u"), py::arg("pred_v"), py::arg("pred_p"),
        py::arg("true_u"), py::arg("true_v"), py::arg("true_p"), py::arg("sdf"),
        py::arg("re"), py::arg("config") = EvalConfig{},
        "All three metrics plus scores for one sample, as a dict.");

    m.def(
        "random_split",
        [](const std::vector<std::string>& ids, const std::vector<double>& res,
           double test_fraction, std::uint64_t seed) {
            const SplitResult s = random_split(ids_dataset(ids, res), test_fraction, seed);
            return py::make_tuple(s.train_ids, s.test_ids);
        },
        py::arg("ids"), py::arg("res"), py::arg("test_fraction") = 0.2,
        py::arg("seed") = 0, "Deterministic shuffle split; returns (train, test) ids.");

    m.def(
        "extrapolatory_split",
        [](const std::vector<std::string>& ids, const std::vector<double>& res,
           double tail_fraction, bool span_based) {
            const SplitResult s =
                extrapolatory_split(ids_dataset(ids, res), tail_fraction, span_based);
            return py::make_tuple(s.train_ids, s.test_ids);
        },
        py::arg("ids"), py::arg("res"), py::arg("tail_fraction") = 0.1,
        py::arg("span_based") = false,
        "Re-tail split; returns (train, test) ids.");

    m.def(
        "manufactured_sample",
        [](const std::string& kind, const Grid& grid, double re, const EvalConfig& config) {
            ManufacturedKind k;
            if (kind == "polynomial-shear")
                k = ManufacturedKind::PolynomialShear;
            else if (kind == "radial-disc")
                k = ManufacturedKind::RadialDisc;
            else if (kind == "product-sine")
                k = ManufacturedKind::ProductSine;
            else
                raise(ErrorCode::InvalidArgument, "unknown manufactured kind " + kind);
            const ManufacturedSample ms = manufactured_sample(k, grid, re, config);
            py::dict d;
            d["u"] = to_array(grid, ms.sample.truth.u.values);
            d["v"] = to_array(grid, ms.sample.truth.v.values);
            d["p"] = to_array(grid, ms.sample.truth.p.values);
            d["sdf"] = to_array(grid, ms.sample.sdf->values);
            d["re"] = ms.sample.re;
            d["m1_zero_pred"] = ms.m1_zero_pred;
            d["m2_zero_pred"] = ms.m2_zero_pred;
            if (ms.m1_zero_pred_limit) d["m1_zero_pred_limit"] = *ms.m1_zero_pred_limit;
            if (ms.m2_zero_pred_limit) d["m2_zero_pred_limit"] = *ms.m2_zero_pred_limit;
            if (ms.m3_truth_limit) d["m3_truth_limit"] = *ms.m3_truth_limit;
            return d;
        },
        py::arg("kind"), py::arg("grid"), py::arg("re") = 100.0,
        py::arg("config") = EvalConfig{},
        "Analytic verification sample: fields, SDF and metric expectations.");
}
