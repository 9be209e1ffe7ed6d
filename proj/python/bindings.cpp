#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thz/beam.hpp"
#include "thz/parallel.hpp"
#include "thz/phantoms.hpp"
#include "thz/radon.hpp"
#include "thz/recon_linear.hpp"
#include "thz/recon_nonlinear.hpp"

namespace py = pybind11;
using namespace thz;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Images are (n, n) arrays indexed [row, col]; sinograms are (n_angles, n_offsets).

Array to_array(const DensityImage& f) {
    const auto n = static_cast<py::ssize_t>(f.grid.size());
    Array a({n, n});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    return a;
}

Array to_array(const Sinogram& s) {
    Array a({static_cast<py::ssize_t>(s.geometry.n_angles()), static_cast<py::ssize_t>(s.geometry.n_offsets())});
    std::copy(s.values.begin(), s.values.end(), a.mutable_data());
    return a;
}

DensityImage image_from(const ImageGrid& grid, const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != static_cast<py::ssize_t>(grid.size()) || a.shape(1) != a.shape(0)) {
        throw py::value_error("image array must have shape (n, n) matching the grid");
    }
    return DensityImage(grid, std::vector<double>(a.data(), a.data() + a.size()));
}

Sinogram sinogram_from(const ScanGeometry& geo, const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != static_cast<py::ssize_t>(geo.n_angles()) ||
        a.shape(1) != static_cast<py::ssize_t>(geo.n_offsets())) {
        throw py::value_error("sinogram array must have shape (n_angles, n_offsets)");
    }
    return Sinogram(geo, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict log_dict(const IterationLog& log) {
    py::dict d;
    d["residuals"] = log.residuals;
    d["stepsizes"] = log.stepsizes;
    d["reason"] = std::string(to_string(log.reason));
    d["final_index"] = log.final_index;
    return d;
}

StoppingRule make_stop(double tau, double delta, std::size_t k_max) {
    StoppingRule s;
    s.tau = tau;
    s.delta = delta;
    s.k_max = k_max;
    return s;
}

LandweberVariant parse_variant(const std::string& v) {
    if (v == "plain") return LandweberVariant::Plain;
    if (v == "ista") return LandweberVariant::Ista;
    if (v == "fista") return LandweberVariant::Fista;
    throw py::value_error("variant must be plain, ista or fista");
}

FbpFilter parse_filter(const std::string& f) {
    if (f == "ramlak") return FbpFilter::RamLak;
    if (f == "hann") return FbpFilter::Hann;
    throw py::value_error("filter must be ramlak or hann");
}

}  // namespace

PYBIND11_MODULE(_thz_tomo, m) {
    m.doc() = "THz tomography core";
    py::register_exception<std::invalid_argument>(m, "InvalidArgument", PyExc_ValueError);

    py::class_<ImageGrid>(m, "ImageGrid")
        .def(py::init<std::size_t, double>(), py::arg("n"), py::arg("extent") = 1.0)
        .def_property_readonly("n", &ImageGrid::size)
        .def_property_readonly("extent", &ImageGrid::extent)
        .def_property_readonly("pixel_side", &ImageGrid::pixel_side)
        .def("__repr__", [](const ImageGrid& g) {
            return "ImageGrid(n=" + std::to_string(g.size()) + ", extent=" + std::to_string(g.extent()) + ")";
        });

    py::class_<ScanGeometry>(m, "ScanGeometry")
        .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("angles"), py::arg("offsets"))
        .def_static("uniform", &ScanGeometry::uniform, py::arg("n_angles"), py::arg("n_offsets"),
                    py::arg("extent") = 1.0)
        .def_property_readonly("angles", &ScanGeometry::angles)
        .def_property_readonly("offsets", &ScanGeometry::offsets)
        .def_property_readonly("shape", [](const ScanGeometry& g) { return py::make_tuple(g.n_angles(), g.n_offsets()); });

    py::class_<ProjectionMatrix>(m, "Projector")
        .def(py::init([](const ImageGrid& g, const ScanGeometry& geo) { return build_projector(g, geo); }),
             py::arg("grid"), py::arg("geometry"))
        .def_property_readonly("shape", [](const ProjectionMatrix& P) { return py::make_tuple(P.rows(), P.cols()); })
        .def_property_readonly("nnz", [](const ProjectionMatrix& P) { return P.values().size(); })
        .def("radon", [](const ProjectionMatrix& P, const Array& f) { return to_array(apply_radon(P, image_from(P.grid(), f))); })
        .def("back_project", [](const ProjectionMatrix& P, const Array& g) {
            return to_array(apply_back_projection(P, sinogram_from(P.geometry(), g)));
        })
        .def("norm_estimate", [](const ProjectionMatrix& P, std::size_t iters, double tol) {
            return operator_norm_estimate(P, iters, tol).value;
        }, py::arg("iters") = 200, py::arg("tol") = 1e-10);

    py::class_<ForwardContext>(m, "BeamContext")
        .def(py::init([](const ImageGrid& g, const ScanGeometry& det, double fwhm, double half_width, std::size_t m) {
                 if (fwhm == 0.0) return ForwardContext(g, det, BeamProfile::delta(), 1);
                 return make_gaussian_context(g, det, fwhm, half_width > 0 ? half_width : 2 * fwhm, m);
             }),
             py::arg("grid"), py::arg("detector"), py::arg("fwhm") = 0.04, py::arg("half_width") = 0.0,
             py::arg("oversampling") = 4, "Gaussian beam context; fwhm = 0 selects the single-ray (delta) beam.")
        .def("forward", [](const ForwardContext& c, const Array& f) {
            return to_array(forward_full_beam(c, image_from(c.grid(), f)));
        })
        .def("jacobian", [](const ForwardContext& c, const Array& f, const Array& h) {
            return to_array(jacobian_apply(c, image_from(c.grid(), f), image_from(c.grid(), h)));
        })
        .def("jacobian_adjoint", [](const ForwardContext& c, const Array& f, const Array& g) {
            return to_array(jacobian_adjoint(c, image_from(c.grid(), f), sinogram_from(c.detector(), g)));
        });

    m.def("smoothed_exp", py::vectorize(&smoothed_exp));
    m.def("set_thread_count", &set_thread_count, py::arg("n"));

    m.def("triangle_phantom", [](const ImageGrid& g, double circumradius, double rotation, double side, double top, double value) {
        TriangleSpec s;
        s.circumradius = circumradius;
        s.rotation = rotation;
        s.side_wall_thickness = side;
        s.top_wall_thickness = top;
        s.value = value;
        return to_array(triangle_phantom(g, s));
    }, py::arg("grid"), py::arg("circumradius") = 0.7, py::arg("rotation") = 0.0, py::arg("side_wall") = 0.08,
       py::arg("top_wall") = 0.16, py::arg("value") = 1.0);
    m.def("disk_phantom", [](const ImageGrid& g, double cx, double cy, double r, double v) {
        return to_array(disk_phantom(g, {cx, cy}, r, v));
    }, py::arg("grid"), py::arg("cx") = 0.0, py::arg("cy") = 0.0, py::arg("radius") = 0.5, py::arg("value") = 1.0);
    m.def("analytic_disk_sinogram", [](const ScanGeometry& geo, double cx, double cy, double r, double v) {
        return to_array(analytic_disk_sinogram(geo, {cx, cy}, r, v));
    }, py::arg("geometry"), py::arg("cx") = 0.0, py::arg("cy") = 0.0, py::arg("radius") = 0.5, py::arg("value") = 1.0);
    m.def("add_noise", [](const ScanGeometry& geo, const Array& g, double level, std::uint64_t seed) {
        const auto r = add_noise(sinogram_from(geo, g), level, seed);
        return py::make_tuple(to_array(r.data), r.delta);
    }, py::arg("geometry"), py::arg("sinogram"), py::arg("level"), py::arg("seed"));

    m.def("fbp", [](const ProjectionMatrix& P, const Array& g, const std::string& filter, double cutoff) {
        return to_array(fbp(P, sinogram_from(P.geometry(), g), parse_filter(filter), cutoff));
    }, py::arg("projector"), py::arg("sinogram"), py::arg("filter") = "ramlak", py::arg("cutoff") = 1.0);
    m.def("tikhonov", [](const ProjectionMatrix& P, const Array& g, double beta, double tol, std::size_t cg_max) {
        return to_array(tikhonov(P, sinogram_from(P.geometry(), g), beta, tol, cg_max));
    }, py::arg("projector"), py::arg("sinogram"), py::arg("beta"), py::arg("cg_tol") = 1e-8, py::arg("cg_max") = 1000);
    m.def("contour", [](const ProjectionMatrix& P, const Array& g) {
        return to_array(contour(P, sinogram_from(P.geometry(), g)));
    }, py::arg("projector"), py::arg("sinogram"));
    m.def("landweber", [](const ProjectionMatrix& P, const Array& g, double gamma, std::size_t k_max, double delta,
                          double tau, const std::string& variant, double sparsity) {
        if (gamma == 0.0) gamma = default_landweber_stepsize(P);
        const auto r = landweber(P, sinogram_from(P.geometry(), g), gamma, make_stop(tau, delta, k_max),
                                 parse_variant(variant), sparsity);
        return py::make_tuple(to_array(r.image), log_dict(r.log));
    }, py::arg("projector"), py::arg("sinogram"), py::arg("gamma") = 0.0, py::arg("k_max") = 2000,
       py::arg("delta") = 0.0, py::arg("tau") = 1.5, py::arg("variant") = "plain", py::arg("sparsity") = 0.0);
    m.def("nonlinear_landweber", [](const ForwardContext& c, const Array& g, std::size_t k_max, double delta, double tau,
                                    double gamma, bool nonneg) {
        NonlinearSolveConfig cfg;
        cfg.stop = make_stop(tau, delta, k_max);
        cfg.stepsize_mode = gamma > 0.0 ? StepsizeMode::Constant : StepsizeMode::SteepestDescent;
        cfg.gamma = gamma;
        cfg.nonneg_projection = nonneg;
        const auto r = nonlinear_landweber(c, sinogram_from(c.detector(), g), DensityImage(c.grid()), cfg);
        return py::make_tuple(to_array(r.image), log_dict(r.log));
    }, py::arg("context"), py::arg("data"), py::arg("k_max") = 200, py::arg("delta") = 0.0, py::arg("tau") = 1.5,
       py::arg("gamma") = 0.0, py::arg("nonneg") = false,
       "gamma = 0 selects the steepest-descent stepsize.");
}
