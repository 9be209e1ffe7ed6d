#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>

#include "thz/beam.hpp"
#include "thz/io.hpp"
#include "thz/parallel.hpp"
#include "thz/phantoms.hpp"
#include "thz/radon.hpp"
#include "thz/recon_linear.hpp"
#include "thz/recon_nonlinear.hpp"
#include "thz/signal.hpp"

namespace thz::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Every long option of the subcommand with its effective value.
json recorded_flags(const CLI::App& sub) {
    json flags = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help") continue;
        if (opt->get_type_size() == 0) {
            flags[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& r = opt->results();
            flags[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else {
            flags[name] = opt->get_default_str();
        }
    }
    return flags;
}

class Provenance {
public:
    Provenance(std::string command, const CLI::App& sub) : step_{{"command", std::move(command)}, {"flags", recorded_flags(sub)}} {
        step_["inputs"] = json::array();
    }

    void add_input(const fs::path& path, const io::Dataset& ds) {
        step_["inputs"].push_back({{"file", path.filename().string()}, {"sha256", io::sha256_file(path)}});
        if (ds.header.contains("provenance")) {
            for (const auto& s : ds.header["provenance"]) prior_.push_back(s);
        }
    }

    void note(const std::string& key, json value) { step_[key] = std::move(value); }

    json chain() const {
        json all = prior_;
        all.push_back(step_);
        return all;
    }

private:
    json step_;
    json prior_ = json::array();
};

io::Dataset load(const fs::path& path) {
    if (!fs::exists(path)) throw io::DataError("input file not found: " + path.string());
    return io::read_dataset(path);
}

void save(const fs::path& path, io::Dataset ds, const Provenance& prov, bool csv) {
    ds.header["provenance"] = prov.chain();
    io::write_dataset(path, ds, csv ? io::Encoding::Csv : io::Encoding::Binary);
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

std::string header_str(const json& h, const char* key) { return h.contains(key) ? h[key].get<std::string>() : ""; }

DataMode parse_mode(const std::string& m) { return m == "I" ? DataMode::I : DataMode::P; }

// ---------------------------------------------------------------- phantom

struct PhantomArgs {
    std::string shape = "triangle";
    std::size_t n = 81;
    double extent = 1.0;
    double value = 1.0;
    double circumradius = 0.7;
    double rotation = 0.0;
    double side_wall = 0.08;
    double top_wall = 0.16;
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.5;
    std::string output;
    std::string pgm;
    bool csv = false;
};

void add_phantom(CLI::App& app, PhantomArgs& a) {
    app.add_option("--shape", a.shape, "triangle or disk")->check(CLI::IsMember({"triangle", "disk"}));
    app.add_option("--n", a.n, "grid size n (image is n x n)")->check(CLI::PositiveNumber);
    app.add_option("--extent", a.extent, "grid half-width")->check(CLI::PositiveNumber);
    app.add_option("--value", a.value, "density inside the shape");
    app.add_option("--circumradius", a.circumradius, "triangle circumradius");
    app.add_option("--rotation", a.rotation, "triangle rotation (rad)");
    app.add_option("--side-wall", a.side_wall, "triangle side wall thickness");
    app.add_option("--top-wall", a.top_wall, "triangle top wall thickness");
    app.add_option("--center-x", a.cx, "shape center x");
    app.add_option("--center-y", a.cy, "shape center y");
    app.add_option("--radius", a.radius, "disk radius")->check(CLI::NonNegativeNumber);
    app.add_option("-o,--output", a.output, "output dataset header (.json)")->required();
    app.add_option("--pgm", a.pgm, "optional PGM preview path");
    app.add_flag("--csv", a.csv, "store the payload inline as CSV");
}

int cmd_phantom(const PhantomArgs& a, const CLI::App& sub, std::ostream& out) {
    const ImageGrid grid(a.n, a.extent);
    DensityImage img(grid);
    try {
        if (a.shape == "triangle") {
            TriangleSpec spec;
            spec.circumradius = a.circumradius;
            spec.centroid = {a.cx, a.cy};
            spec.rotation = a.rotation;
            spec.side_wall_thickness = a.side_wall;
            spec.top_wall_thickness = a.top_wall;
            spec.value = a.value;
            img = triangle_phantom(grid, spec);
        } else {
            img = disk_phantom(grid, {a.cx, a.cy}, a.radius, a.value);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    Provenance prov("phantom", sub);
    save(a.output, io::image_dataset(img), prov, a.csv);
    if (!a.pgm.empty()) io::write_pgm(a.pgm, img);
    out << "wrote " << a.output << " (" << a.n << "x" << a.n << ")\n";
    return kOk;
}

// ---------------------------------------------------------------- simulate

struct BeamArgs {
    std::string profile = "gaussian";
    double fwhm = 0.04;
    double half_width = 0.0;
    std::size_t oversampling = 4;
};

void add_beam(CLI::App& app, BeamArgs& b) {
    app.add_option("--profile", b.profile, "beam profile: gaussian or delta")->check(CLI::IsMember({"gaussian", "delta"}));
    app.add_option("--fwhm", b.fwhm, "Gaussian beam FWHM")->check(CLI::PositiveNumber);
    app.add_option("--half-width", b.half_width, "profile half-width (0: 2 * fwhm)")->check(CLI::NonNegativeNumber);
    app.add_option("--oversampling", b.oversampling, "refined offsets per detector spacing")->check(CLI::PositiveNumber);
}

json beam_json(const BeamArgs& b) {
    return {{"profile", b.profile},
            {"fwhm", b.fwhm},
            {"half_width", b.half_width > 0.0 ? b.half_width : 2.0 * b.fwhm},
            {"oversampling", b.oversampling}};
}

ForwardContext make_context(const ImageGrid& grid, const ScanGeometry& geo, const BeamArgs& b) {
    if (b.profile == "delta") return ForwardContext(grid, geo, BeamProfile::delta(), 1);
    const double hw = b.half_width > 0.0 ? b.half_width : 2.0 * b.fwhm;
    try {
        return make_gaussian_context(grid, geo, b.fwhm, hw, b.oversampling);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

struct SimulateArgs {
    std::string input;
    std::string output;
    std::string model = "full-beam";
    std::string mode = "P";
    std::size_t angles = 360;
    std::size_t offsets = 71;
    BeamArgs beam;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::string noise_kind = "gaussian";
    double n_material = 1.5;
    double n0 = 1.0;
    double alpha = 1.0;
    double c0 = 1.0;
    double t0 = 0.0;
    double dt = 0.005;
    std::size_t samples = 400;
    double pulse_center = 0.3;
    double pulse_width = 0.05;
    bool csv = false;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
    app.add_option("-i,--input", a.input, "phantom image dataset")->required();
    app.add_option("-o,--output", a.output, "output dataset header (.json)")->required();
    app.add_option("--model", a.model, "full-beam, single-ray or time-domain")
        ->check(CLI::IsMember({"full-beam", "single-ray", "time-domain"}));
    app.add_option("--mode", a.mode, "P (field integral) or I (energy); I needs single-ray")
        ->check(CLI::IsMember({"P", "I"}));
    app.add_option("--angles", a.angles, "number of uniformly spaced angles in [0, 2pi)")->check(CLI::PositiveNumber);
    app.add_option("--offsets", a.offsets, "number of parallel beams")->check(CLI::Range(2, 1 << 20));
    add_beam(app, a.beam);
    app.add_option("--noise", a.noise, "relative noise level")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", a.seed, "noise seed");
    app.add_option("--noise-kind", a.noise_kind, "gaussian or uniform")->check(CLI::IsMember({"gaussian", "uniform"}));
    app.add_option("--n-material", a.n_material, "material refractive index");
    app.add_option("--n0", a.n0, "refractive index of air");
    app.add_option("--alpha", a.alpha, "material absorption value");
    app.add_option("--c0", a.c0, "speed of light");
    app.add_option("--t0", a.t0, "first sample time");
    app.add_option("--dt", a.dt, "time step")->check(CLI::PositiveNumber);
    app.add_option("--samples", a.samples, "samples per trace")->check(CLI::Range(4, 1 << 24));
    app.add_option("--pulse-center", a.pulse_center, "reference pulse center time");
    app.add_option("--pulse-width", a.pulse_width, "reference pulse width")->check(CLI::PositiveNumber);
    app.add_flag("--csv", a.csv, "store the payload inline as CSV");
}

int cmd_simulate(const SimulateArgs& a, const CLI::App& sub, std::ostream& out) {
    if (a.model != "single-ray" && a.mode == "I") throw UsageError("--mode I is only defined for --model single-ray");
    Provenance prov("simulate", sub);
    const io::Dataset in = load(a.input);
    prov.add_input(a.input, in);
    const DensityImage f = io::image_from(in);
    const ImageGrid& grid = f.grid;
    const auto geo = ScanGeometry::uniform(a.angles, a.offsets, grid.extent());
    const NoiseKind kind = a.noise_kind == "uniform" ? NoiseKind::Uniform : NoiseKind::Gaussian;
    const MaterialParams material{a.n_material, a.n0, a.alpha, a.c0};
    try {
        material.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    io::Dataset ds;
    double delta = 0.0;
    if (a.model == "time-domain") {
        const ForwardContext ctx = make_context(grid, geo, a.beam);
        const PulseTrace ref = synthetic_reference_pulse(a.t0, a.dt, a.samples, a.pulse_center, a.pulse_width);
        const PulseEnsemble ens = simulate_pulse_ensemble(ctx, f, ref, material);
        std::vector<PulseTrace> traces;
        traces.reserve(geo.size());
        for (std::size_t j = 0; j < geo.n_angles(); ++j) {
            for (std::size_t i = 0; i < geo.n_offsets(); ++i) traces.push_back(ens.trace(i, j));
        }
        ds = io::traces_dataset(RawDataSet(geo, std::move(traces), ref));
        if (a.noise > 0.0) {
            std::span<double> cells(ds.payload.data() + a.samples, ds.payload.size() - a.samples);
            delta = add_noise_inplace(cells, a.noise, a.seed, kind);
        }
        ds.header["beam"] = beam_json(a.beam);
    } else {
        Sinogram s(geo);
        if (a.model == "full-beam") {
            s = forward_full_beam(make_context(grid, geo, a.beam), f);
            ds.header["beam"] = beam_json(a.beam);
        } else {
            const Sinogram Rf = apply_radon(build_projector(grid, geo), f);
            const double factor = a.mode == "P" ? 0.5 : 1.0;
            for (std::size_t r = 0; r < s.values.size(); ++r) s.values[r] = std::exp(-factor * Rf.values[r]);
            ds.header["beam"] = {{"profile", "delta"}};
        }
        if (a.noise > 0.0) {
            auto noisy = add_noise(s, a.noise, a.seed, kind);
            s = std::move(noisy.data);
            delta = noisy.delta;
        }
        ds.payload = s.values;
        ds.header["kind"] = "sinogram";
        ds.header["geometry"] = io::geometry_json(geo);
        ds.header["mode"] = a.mode;
        ds.header["domain"] = "ratio";
    }
    ds.header["grid"] = io::grid_json(grid);
    ds.header["model"] = a.model;
    ds.header["material"] = io::material_json(material);
    ds.header["noise"] = {{"level", a.noise}, {"seed", a.seed}, {"kind", a.noise_kind}, {"delta", delta},
                          {"domain", a.model == "time-domain" ? "traces" : "ratio"}};
    save(a.output, std::move(ds), prov, a.csv);
    out << "wrote " << a.output << " (" << a.model << ", " << a.angles << " angles x " << a.offsets
        << " offsets, delta " << delta << ")\n";
    return kOk;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessArgs {
    std::string input;
    std::string output;
    std::string mode;
    double peak_window = 0.0;
    std::string clip = "1.5";
    double scale = 1.0;
    double sigma_s = 0.0;
    double sigma_theta = 0.0;
    bool log = false;
    bool csv = false;
};

void add_preprocess(CLI::App& app, PreprocessArgs& a) {
    app.add_option("-i,--input", a.input, "sinogram or trace bundle")->required();
    app.add_option("-o,--output", a.output, "output dataset header (.json)")->required();
    app.add_option("--mode", a.mode, "P or I (default: from the input header, P for traces)")
        ->check(CLI::IsMember({"P", "I"}));
    app.add_option("--peak-window", a.peak_window, "main-peak half-width in time units (traces only, 0: off)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--clip", a.clip, "upper clip value, or inf");
    app.add_option("--scale", a.scale, "scale factor after clipping")->check(CLI::PositiveNumber);
    app.add_option("--sigma-s", a.sigma_s, "Gaussian width along offsets (samples)")->check(CLI::NonNegativeNumber);
    app.add_option("--sigma-theta", a.sigma_theta, "Gaussian width along angles (samples)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--log", a.log, "apply -2 ln (P) or -ln (I)");
    app.add_flag("--csv", a.csv, "store the payload inline as CSV");
}

int cmd_preprocess(const PreprocessArgs& a, const CLI::App& sub, std::ostream& out) {
    double clip = 0.0;
    try {
        std::size_t used = 0;
        clip = std::stod(a.clip, &used);
        if (used != a.clip.size() || !(clip > 0.0)) throw std::invalid_argument(a.clip);
    } catch (const std::exception&) {
        throw UsageError("--clip must be a positive number or inf");
    }

    Provenance prov("preprocess", sub);
    const io::Dataset in = load(a.input);
    prov.add_input(a.input, in);
    const std::string kind = header_str(in.header, "kind");
    json applied = json::array();
    std::string mode = a.mode;
    std::optional<Sinogram> s;
    if (kind == "traces") {
        if (mode.empty()) mode = "P";
        RawDataSet raw = io::traces_from(in);
        if (a.peak_window > 0.0) {
            for (auto& tr : raw.traces) tr = extract_main_peak(tr, a.peak_window);
            raw.reference = extract_main_peak(raw.reference, a.peak_window);
            applied.push_back("extract_main_peak");
        }
        s = build_ratio_sinogram(raw, parse_mode(mode));
        applied.push_back("ratio");
    } else if (kind == "sinogram") {
        if (a.peak_window > 0.0) throw UsageError("--peak-window needs a trace bundle as input");
        if (header_str(in.header, "domain") != "ratio") {
            throw io::DataError("preprocess expects ratio data, input domain is '" + header_str(in.header, "domain") + "'");
        }
        const std::string file_mode = header_str(in.header, "mode");
        if (!mode.empty() && mode != file_mode) {
            throw io::DataError("--mode " + mode + " does not match the input's mode " + file_mode);
        }
        mode = file_mode;
        s = io::sinogram_from(in);
    } else {
        throw io::DataError("preprocess needs a sinogram or a trace bundle, got '" + kind + "'");
    }

    PreprocessOptions opts;
    opts.clip_max = clip;
    opts.scale = a.scale;
    opts.sigma_s = a.sigma_s;
    opts.sigma_theta = a.sigma_theta;
    *s = preprocess(*s, opts);
    applied.push_back("clip_scale_filter");
    std::size_t floored = 0;
    if (a.log) {
        auto lr = log_transform(*s, parse_mode(mode));
        floored = lr.floored;
        *s = std::move(lr.data);
        applied.push_back("log");
    }
    prov.note("applied", applied);
    prov.note("log_floored", floored);

    io::Dataset ds = io::sinogram_dataset(*s, mode, a.log ? "log" : "ratio");
    for (const char* key : {"grid", "beam", "material", "noise", "model"}) {
        if (in.header.contains(key)) ds.header[key] = in.header[key];
    }
    save(a.output, std::move(ds), prov, a.csv);
    out << "wrote " << a.output << " (mode " << mode << ", " << (a.log ? "log" : "ratio") << ")";
    if (floored > 0) out << ", " << floored << " values floored before log";
    out << "\n";
    return kOk;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string input;
    std::string output;
    std::string method;
    std::size_t n = 0;
    double extent = 0.0;
    std::string filter = "ramlak";
    double cutoff = 1.0;
    double beta = 500.0;
    double cg_tol = 1e-8;
    std::size_t cg_max = 1000;
    std::size_t iters = 0;
    double gamma = 0.0;
    double tau = 1.5;
    double delta = -1.0;
    double sparsity = 0.0;
    std::string stepsize = "steepest";
    bool nonneg = false;
    BeamArgs beam;
    std::string pgm;
    std::string log_csv;
    bool csv = false;
};

void add_reconstruct(CLI::App& app, ReconstructArgs& a) {
    app.add_option("-i,--input", a.input, "sinogram dataset")->required();
    app.add_option("-o,--output", a.output, "output image header (.json)")->required();
    app.add_option("--method", a.method, "reconstruction method")
        ->required()
        ->check(CLI::IsMember({"fbp", "tikhonov", "landweber", "ista", "fista", "contour", "nonlinear-landweber"}));
    app.add_option("--n", a.n, "image grid size (0: from the input header, else 81)");
    app.add_option("--extent", a.extent, "grid half-width (0: from the input header, else 1)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--filter", a.filter, "fbp filter: ramlak or hann")->check(CLI::IsMember({"ramlak", "hann"}));
    app.add_option("--cutoff", a.cutoff, "fbp cutoff as a fraction of Nyquist")->check(CLI::Range(1e-6, 1.0));
    app.add_option("--beta", a.beta, "Tikhonov regularization parameter")->check(CLI::PositiveNumber);
    app.add_option("--cg-tol", a.cg_tol, "CG relative residual tolerance")->check(CLI::PositiveNumber);
    app.add_option("--cg-max", a.cg_max, "CG iteration cap")->check(CLI::PositiveNumber);
    app.add_option("--iters", a.iters, "iteration cap k_max (0: 2000 linear, 200 nonlinear)");
    app.add_option("--gamma", a.gamma, "stepsize (0: 1/||R||^2 for linear methods)")->check(CLI::NonNegativeNumber);
    app.add_option("--tau", a.tau, "discrepancy principle tau");
    app.add_option("--delta", a.delta, "noise level (negative: from the input header when it applies, else 0)");
    app.add_option("--sparsity", a.sparsity, "ista/fista soft-threshold weight")->check(CLI::NonNegativeNumber);
    app.add_option("--stepsize", a.stepsize, "nonlinear stepsize: steepest or constant")
        ->check(CLI::IsMember({"steepest", "constant"}));
    app.add_flag("--nonneg", a.nonneg, "clamp nonlinear iterates to f >= 0");
    add_beam(app, a.beam);
    app.add_option("--pgm", a.pgm, "PGM preview path (default: next to the output)");
    app.add_option("--log-csv", a.log_csv, "iteration log path (default: next to the output)");
    app.add_flag("--csv", a.csv, "store the payload inline as CSV");
}

void write_iteration_log(const fs::path& path, const IterationLog* log) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "k,residual,stepsize\n";
    if (log == nullptr) return;
    char buf[96];
    for (std::size_t k = 0; k < log->residuals.size(); ++k) {
        if (k < log->stepsizes.size()) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k, log->residuals[k], log->stepsizes[k]);
        } else {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", k, log->residuals[k]);
        }
        os << buf;
    }
}

int cmd_reconstruct(ReconstructArgs a, const CLI::App& sub, std::ostream& out) {
    Provenance prov("reconstruct", sub);
    const io::Dataset in = load(a.input);
    prov.add_input(a.input, in);
    if (header_str(in.header, "kind") != "sinogram") throw io::DataError("reconstruct needs a sinogram input");
    const std::string domain = header_str(in.header, "domain");
    const std::string mode = header_str(in.header, "mode");
    const bool nonlinear = a.method == "nonlinear-landweber";
    if (nonlinear && (domain != "ratio" || mode != "P")) {
        throw io::DataError("nonlinear-landweber needs P-mode ratio data, input is " + mode + "/" + domain);
    }
    if (!nonlinear && domain != "log") {
        throw io::DataError(a.method + " needs log-transformed data, input domain is '" + domain + "'");
    }
    const Sinogram g = io::sinogram_from(in);

    std::size_t n = a.n;
    double extent = a.extent;
    if (in.header.contains("grid")) {
        if (n == 0) n = in.header["grid"].at("n").get<std::size_t>();
        if (extent == 0.0) extent = in.header["grid"].at("extent").get<double>();
    }
    if (n == 0) n = 81;
    if (extent == 0.0) extent = 1.0;
    const ImageGrid grid(n, extent);

    double delta = a.delta;
    if (delta < 0.0) {
        delta = 0.0;
        if (in.header.contains("noise") && in.header["noise"].value("domain", "") == domain) {
            delta = in.header["noise"].value("delta", 0.0);
        }
    }
    StoppingRule stop;
    stop.tau = a.tau;
    stop.delta = delta;
    stop.k_max = a.iters > 0 ? a.iters : (nonlinear ? 200 : 2000);

    std::optional<ReconResult> res;
    DensityImage img(grid);
    if (nonlinear) {
        BeamArgs beam = a.beam;
        if (!sub.get_option("--profile")->count() && in.header.contains("beam")) {
            const json& b = in.header["beam"];
            beam.profile = b.value("profile", beam.profile);
            beam.fwhm = b.value("fwhm", beam.fwhm);
            beam.half_width = b.value("half_width", beam.half_width);
            beam.oversampling = b.value("oversampling", beam.oversampling);
        }
        prov.note("beam", beam_json(beam));
        const ForwardContext ctx = make_context(grid, g.geometry, beam);
        NonlinearSolveConfig cfg;
        cfg.stepsize_mode = a.stepsize == "constant" ? StepsizeMode::Constant : StepsizeMode::SteepestDescent;
        cfg.gamma = a.gamma;
        cfg.stop = stop;
        cfg.nonneg_projection = a.nonneg;
        for (double v : g.values) {
            if (!(v > 0.0)) throw io::DataError("nonlinear-landweber needs strictly positive ratio data");
        }
        res = nonlinear_landweber(ctx, g, DensityImage(grid), cfg);
    } else {
        const ProjectionMatrix P = build_projector(grid, g.geometry);
        if (a.method == "fbp") {
            img = fbp(P, g, a.filter == "hann" ? FbpFilter::Hann : FbpFilter::RamLak, a.cutoff);
        } else if (a.method == "tikhonov") {
            img = tikhonov(P, g, a.beta, a.cg_tol, a.cg_max);
        } else if (a.method == "contour") {
            img = contour(P, g);
        } else {
            const LandweberVariant variant = a.method == "ista"    ? LandweberVariant::Ista
                                             : a.method == "fista" ? LandweberVariant::Fista
                                                                   : LandweberVariant::Plain;
            const double gamma = a.gamma > 0.0 ? a.gamma : default_landweber_stepsize(P);
            prov.note("gamma", gamma);
            res = landweber(P, g, gamma, stop, variant, a.sparsity);
        }
    }
    if (res) img = res->image;

    io::Dataset ds = io::image_dataset(img);
    ds.header["method"] = a.method;
    if (res) {
        ds.header["iterations"] = {{"reason", std::string(to_string(res->log.reason))},
                                   {"final_index", res->log.final_index},
                                   {"final_residual", res->log.residuals.back()},
                                   {"threshold", stop.threshold()}};
    }
    save(a.output, std::move(ds), prov, a.csv);
    const fs::path pgm = a.pgm.empty() ? sibling(a.output, ".pgm") : fs::path(a.pgm);
    const fs::path log_path = a.log_csv.empty() ? sibling(a.output, ".log.csv") : fs::path(a.log_csv);
    io::write_pgm(pgm, img);
    write_iteration_log(log_path, res ? &res->log : nullptr);
    out << "wrote " << a.output << " (" << a.method;
    if (res) out << ", " << to_string(res->log.reason) << " at k=" << res->log.final_index;
    out << ")\n";
    return kOk;
}

// ---------------------------------------------------------------- verify / info

int cmd_verify(const std::vector<std::string>& only, std::ostream& out) {
    const auto results = run_verify(only);
    bool all = true;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-18s %-6s %-60s %s\n", "check", "result", "measured", "threshold");
    out << buf;
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%-18s %-6s %-60s %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                      r.measured.c_str(), r.threshold.c_str());
        out << buf;
        all = all && r.passed;
    }
    return all ? kOk : kVerifyFailed;
}

int cmd_info(const std::string& input, std::ostream& out) {
    if (input.empty()) {
        out << "thz_tomo " << kVersion << "\n";
        out << "schema_version " << io::kSchemaVersion << "\n";
        out << "threads " << thread_count() << "\n";
#if defined(THZ_HAVE_OPENMP)
        out << "openmp yes\n";
#else
        out << "openmp no\n";
#endif
        out << "verify checks:";
        for (const auto& name : verify_check_names()) out << ' ' << name;
        out << "\n";
        return kOk;
    }
    const io::Dataset ds = load(input);
    const json& h = ds.header;
    const std::string kind = header_str(h, "kind");
    out << "kind " << kind << "\n";
    out << "schema_version " << header_str(h, "schema_version") << "\n";
    if (kind == "image") {
        out << "grid " << h["grid"]["n"] << "x" << h["grid"]["n"] << ", extent " << h["grid"]["extent"] << "\n";
    } else {
        out << "geometry " << h["geometry"]["angles"].size() << " angles x " << h["geometry"]["offsets"].size()
            << " offsets\n";
        if (h.contains("mode")) out << "mode " << header_str(h, "mode") << "\n";
        if (h.contains("domain")) out << "domain " << header_str(h, "domain") << "\n";
        if (kind == "traces") out << "samples per trace " << h["time"]["n_samples"] << "\n";
    }
    out << "payload " << h["payload"]["encoding"].get<std::string>() << ", " << ds.payload.size() << " values";
    if (!ds.payload.empty()) {
        const auto [lo, hi] = std::minmax_element(ds.payload.begin(), ds.payload.end());
        out << ", range [" << *lo << ", " << *hi << "]";
    }
    out << "\n";
    if (h.contains("provenance")) {
        out << "provenance";
        for (const auto& step : h["provenance"]) out << ' ' << step.value("command", "?");
        out << "\n";
    }
    return kOk;
}

void check_thread_env() {
    const char* env = std::getenv("THZ_TOMO_THREADS");
    if (env == nullptr) return;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("THZ_TOMO_THREADS must be a positive integer");
    set_thread_count(static_cast<int>(v));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Terahertz tomography: phantoms, simulation, preprocessing, reconstruction", "thz_tomo"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    PhantomArgs phantom_args;
    SimulateArgs simulate_args;
    PreprocessArgs preprocess_args;
    ReconstructArgs reconstruct_args;
    std::vector<std::string> verify_only;
    std::string info_input;

    CLI::App* phantom = app.add_subcommand("phantom", "generate a phantom image");
    add_phantom(*phantom, phantom_args);
    CLI::App* simulate = app.add_subcommand("simulate", "simulate measurement data from a phantom");
    add_simulate(*simulate, simulate_args);
    CLI::App* prep = app.add_subcommand("preprocess", "ratio formation, clip/scale/filter, log transform");
    add_preprocess(*prep, preprocess_args);
    CLI::App* recon = app.add_subcommand("reconstruct", "reconstruct an image from a sinogram");
    add_reconstruct(*recon, reconstruct_args);
    CLI::App* verify = app.add_subcommand("verify", "run the built-in verification suite");
    verify->add_option("--only", verify_only, "run only the named checks")->check(CLI::IsMember(verify_check_names()));
    CLI::App* info = app.add_subcommand("info", "describe a dataset file or the build");
    info->add_option("-i,--input", info_input, "dataset header");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        check_thread_env();
        if (*phantom) return cmd_phantom(phantom_args, *phantom, out);
        if (*simulate) return cmd_simulate(simulate_args, *simulate, out);
        if (*prep) return cmd_preprocess(preprocess_args, *prep, out);
        if (*recon) return cmd_reconstruct(reconstruct_args, *recon, out);
        if (*verify) return cmd_verify(verify_only, out);
        return cmd_info(info_input, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const io::DataError& e) {
        err << "error: " << e.what() << "\n";
        return kDataMismatch;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataMismatch;
    }
}

}  // namespace thz::cli
