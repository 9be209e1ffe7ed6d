#include "thz/beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "thz/parallel.hpp"

namespace thz {

double smoothed_exp(double x) {
    if (x >= 0.0) return std::exp(-x);
    return 1.0 / (1.0 + x + 0.5 * x * x);
}

double smoothed_exp_d1(double x) {
    if (x >= 0.0) return -std::exp(-x);
    const double q = 1.0 + x + 0.5 * x * x;
    return -(1.0 + x) / (q * q);
}

double smoothed_exp_d2(double x) {
    if (x >= 0.0) return std::exp(-x);
    const double q = 1.0 + x + 0.5 * x * x;
    return (2.0 * (1.0 + x) * (1.0 + x) - q) / (q * q * q);
}

BeamProfile::BeamProfile(std::vector<double> rel_offsets, std::vector<double> weights, double spacing)
    : rel_offsets_(std::move(rel_offsets)), weights_(std::move(weights)), spacing_(spacing) {
    if (weights_.empty() || weights_.size() != rel_offsets_.size()) {
        throw std::invalid_argument("BeamProfile: offsets and weights must be nonempty and equally long");
    }
    if (weights_.size() % 2 == 0) throw std::invalid_argument("BeamProfile: sample count must be odd");
    if (!(spacing_ > 0.0)) throw std::invalid_argument("BeamProfile: spacing must be positive");
    const std::size_t n = weights_.size();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (!(weights_[k] >= 0.0)) throw std::invalid_argument("BeamProfile: weights must be nonnegative");
        if (std::abs(rel_offsets_[k] + rel_offsets_[n - 1 - k]) > 1e-12) {
            throw std::invalid_argument("BeamProfile: offsets must be symmetric about zero");
        }
        if (k > 0 && std::abs((rel_offsets_[k] - rel_offsets_[k - 1]) - spacing_) > 1e-9 * spacing_) {
            throw std::invalid_argument("BeamProfile: offsets must be uniformly spaced");
        }
        total += weights_[k];
    }
    if (std::abs(total * spacing_ - 1.0) > 1e-12) {
        throw std::invalid_argument("BeamProfile: weights must integrate to one");
    }
}

BeamProfile BeamProfile::delta() { return BeamProfile({0.0}, {1.0}, 1.0); }

BeamProfile sample_gaussian_profile(double fwhm, double half_width, std::size_t n_samples) {
    if (!(fwhm > 0.0)) throw std::invalid_argument("sample_gaussian_profile: fwhm must be positive");
    if (!(half_width >= fwhm)) throw std::invalid_argument("sample_gaussian_profile: half_width must be >= fwhm");
    if (n_samples < 3 || n_samples % 2 == 0) {
        throw std::invalid_argument("sample_gaussian_profile: n_samples must be odd and >= 3");
    }
    const double dr = 2.0 * half_width / static_cast<double>(n_samples - 1);
    const auto K = static_cast<std::ptrdiff_t>(n_samples / 2);
    std::vector<double> r(n_samples);
    std::vector<double> w(n_samples);
    double total = 0.0;
    for (std::ptrdiff_t k = -K; k <= K; ++k) {
        const auto idx = static_cast<std::size_t>(k + K);
        r[idx] = static_cast<double>(k) * dr;
        w[idx] = std::exp(-4.0 * std::log(2.0) * r[idx] * r[idx] / (fwhm * fwhm));
        total += w[idx];
    }
    for (double& v : w) v /= total * dr;
    return BeamProfile(std::move(r), std::move(w), dr);
}

void MaterialParams::validate() const {
    if (!(n0 >= 1.0) || !(n >= n0) || !(alpha_m > 0.0) || !(c0 > 0.0)) {
        throw std::invalid_argument("MaterialParams: need n >= n0 >= 1, alpha_M > 0, c0 > 0");
    }
}

namespace {

ScanGeometry refined_geometry(const ScanGeometry& detector, std::size_t oversampling, std::size_t half_count) {
    const double delta = detector.offset_spacing() / static_cast<double>(oversampling);
    const std::size_t count = (detector.n_offsets() - 1) * oversampling + 2 * half_count + 1;
    std::vector<double> offsets(count);
    const double start = detector.offsets().front() - static_cast<double>(half_count) * delta;
    for (std::size_t q = 0; q < count; ++q) offsets[q] = start + static_cast<double>(q) * delta;
    // pin the samples that coincide with detector offsets to the exact values
    for (std::size_t i = 0; i < detector.n_offsets(); ++i) {
        offsets[i * oversampling + half_count] = detector.offsets()[i];
    }
    return ScanGeometry(detector.angles(), std::move(offsets));
}

void require_grid(const ForwardContext& ctx, const DensityImage& f, const char* what) {
    if (!(f.grid == ctx.grid())) throw std::invalid_argument(std::string(what) + ": image grid does not match context");
}

}  // namespace

ForwardContext::ForwardContext(const ImageGrid& grid, ScanGeometry detector, BeamProfile profile,
                               std::size_t oversampling)
    : detector_(std::move(detector)), profile_(std::move(profile)), oversampling_(oversampling) {
    if (oversampling_ < 1) throw std::invalid_argument("ForwardContext: oversampling must be >= 1");
    if (!detector_.offsets_uniform()) throw std::invalid_argument("ForwardContext: detector offsets must be uniform");
    const double delta = detector_.offset_spacing() / static_cast<double>(oversampling_);
    if (profile_.size() > 1 && std::abs(profile_.spacing() - delta) > 1e-9 * delta) {
        throw std::invalid_argument("ForwardContext: profile spacing must equal detector spacing / oversampling");
    }
    fine_ = std::make_shared<const ProjectionMatrix>(
        build_projector(grid, refined_geometry(detector_, oversampling_, profile_.half_count())));
}

ForwardContext make_gaussian_context(const ImageGrid& grid, const ScanGeometry& detector, double fwhm,
                                     double half_width, std::size_t oversampling) {
    if (oversampling < 1) throw std::invalid_argument("make_gaussian_context: oversampling must be >= 1");
    if (!(half_width >= fwhm) || !(fwhm > 0.0)) {
        throw std::invalid_argument("make_gaussian_context: need 0 < fwhm <= half_width");
    }
    const double delta = detector.offset_spacing() / static_cast<double>(oversampling);
    auto half = static_cast<std::size_t>(std::ceil(half_width / delta - 1e-9));
    if (half < 1) half = 1;
    const double effective = static_cast<double>(half) * delta;
    return ForwardContext(grid, detector, sample_gaussian_profile(fwhm, effective, 2 * half + 1),
                          oversampling);
}

BeamLinearization::BeamLinearization(const ForwardContext& ctx, const DensityImage& f)
    : ctx_(ctx), fine_radon_(ctx.fine_projector().rows()) {
    require_grid(ctx, f, "BeamLinearization");
    ctx.fine_projector().multiply(f.values, fine_radon_);
}

Sinogram BeamLinearization::forward() const {
    const auto& det = ctx_.detector();
    const auto& prof = ctx_.profile();
    const std::size_t n_off = det.n_offsets();
    const std::size_t n_fine = ctx_.fine_projector().geometry().n_offsets();
    const double dr = prof.spacing();
    Sinogram out(det);
    parallel_for(0, det.size(), [&](std::size_t r) {
        const std::size_t i = r % n_off;
        const std::size_t j = r / n_off;
        const double* row = fine_radon_.data() + j * n_fine;
        double acc = 0.0;
        for (std::size_t k = 0; k < prof.size(); ++k) {
            acc += prof.weights()[k] * smoothed_exp(0.5 * row[ctx_.fine_index(i, k)]);
        }
        out.values[r] = acc * dr;
    });
    return out;
}

Sinogram BeamLinearization::apply(const DensityImage& h) const {
    require_grid(ctx_, h, "jacobian_apply");
    std::vector<double> fine_h(ctx_.fine_projector().rows());
    ctx_.fine_projector().multiply(h.values, fine_h);
    const auto& det = ctx_.detector();
    const auto& prof = ctx_.profile();
    const std::size_t n_off = det.n_offsets();
    const std::size_t n_fine = ctx_.fine_projector().geometry().n_offsets();
    const double dr = prof.spacing();
    Sinogram out(det);
    parallel_for(0, det.size(), [&](std::size_t r) {
        const std::size_t i = r % n_off;
        const std::size_t j = r / n_off;
        const double* rf = fine_radon_.data() + j * n_fine;
        const double* rh = fine_h.data() + j * n_fine;
        double acc = 0.0;
        for (std::size_t k = 0; k < prof.size(); ++k) {
            const std::size_t q = ctx_.fine_index(i, k);
            acc += prof.weights()[k] * smoothed_exp_d1(0.5 * rf[q]) * rh[q];
        }
        out.values[r] = 0.5 * acc * dr;
    });
    return out;
}

DensityImage BeamLinearization::adjoint(const Sinogram& g) const {
    const auto& det = ctx_.detector();
    if (g.values.size() != det.size()) throw std::invalid_argument("jacobian_adjoint: sinogram does not match detector");
    const auto& fine = ctx_.fine_projector();
    const auto& prof = ctx_.profile();
    const std::size_t n_off = det.n_offsets();
    const std::size_t n_fine = fine.geometry().n_offsets();
    const std::size_t m = ctx_.oversampling();
    const std::size_t K = prof.half_count();
    // Correlate g with w over detector offsets on the fine grid. The factor
    // ds * dr / delta makes the fine back-projection the exact adjoint of the
    // detector-weighted forward sum.
    const double factor = det.offset_spacing() * prof.spacing() / fine.geometry().offset_spacing();
    Sinogram z(fine.geometry());
    parallel_for(0, fine.rows(), [&](std::size_t r) {
        const std::size_t q = r % n_fine;
        const std::size_t j = r / n_fine;
        // detector offsets i with q = i*m + k, 0 <= k <= 2K
        double acc = 0.0;
        const std::size_t i_hi = std::min(q / m, n_off - 1);
        const std::size_t i_lo = q >= 2 * K ? (q - 2 * K + m - 1) / m : 0;
        for (std::size_t i = i_lo; i <= i_hi; ++i) {
            const std::size_t k = q - i * m;
            if (k > 2 * K) continue;
            acc += prof.weights()[k] * g.values[j * n_off + i];
        }
        z.values[r] = 0.5 * smoothed_exp_d1(0.5 * fine_radon_[r]) * acc * factor;
    });
    return apply_back_projection(fine, z);
}

Sinogram forward_full_beam(const ForwardContext& ctx, const DensityImage& f) {
    return BeamLinearization(ctx, f).forward();
}

Sinogram jacobian_apply(const ForwardContext& ctx, const DensityImage& f, const DensityImage& h) {
    return BeamLinearization(ctx, f).apply(h);
}

DensityImage jacobian_adjoint(const ForwardContext& ctx, const DensityImage& f, const Sinogram& g) {
    return BeamLinearization(ctx, f).adjoint(g);
}

DelayResult compute_delay(const ProjectionMatrix& P, const DensityImage& f, const MaterialParams& m) {
    m.validate();
    DelayResult res{apply_radon(P, f), 0};
    const double tol = 1e-6 * m.alpha_m;
    for (double v : f.values) {
        if (std::abs(v) > tol && std::abs(v - m.alpha_m) > tol) ++res.nonuniform_pixels;
    }
    const double coef = m.delay_per_radon();
    for (double& v : res.delay.values) v *= coef;
    return res;
}

PulseTrace PulseEnsemble::trace(std::size_t offset, std::size_t angle) const {
    const std::size_t cell = angle * geometry.n_offsets() + offset;
    auto first = samples.begin() + static_cast<std::ptrdiff_t>(cell * n_samples);
    return PulseTrace(t0, dt, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n_samples)));
}

PulseEnsemble simulate_pulse_ensemble(const ForwardContext& ctx, const DensityImage& f, const PulseTrace& e_ref,
                                      const MaterialParams& m) {
    m.validate();
    require_grid(ctx, f, "simulate_pulse_ensemble");
    if (e_ref.samples.size() < 4) throw std::invalid_argument("simulate_pulse_ensemble: reference needs >= 4 samples");

    const auto& det = ctx.detector();
    const auto& prof = ctx.profile();
    const auto& fine = ctx.fine_projector();
    std::vector<double> rf(fine.rows());
    fine.multiply(f.values, rf);

    const std::size_t N = e_ref.samples.size();
    const std::size_t n_off = det.n_offsets();
    const std::size_t n_fine = fine.geometry().n_offsets();
    const double coef = m.delay_per_radon();
    const double dr = prof.spacing();
    const auto& e = e_ref.samples;

    PulseEnsemble out{det, e_ref.t0, e_ref.dt, N, std::vector<double>(det.size() * N, 0.0)};
    parallel_for(0, det.size(), [&](std::size_t r) {
        const std::size_t i = r % n_off;
        const std::size_t j = r / n_off;
        double* dst = out.samples.data() + r * N;
        for (std::size_t k = 0; k < prof.size(); ++k) {
            const double radon = rf[j * n_fine + ctx.fine_index(i, k)];
            const double amp = prof.weights()[k] * dr * smoothed_exp(0.5 * radon);
            const double shift = coef * radon / e_ref.dt;  // in samples
            if (amp == 0.0) continue;
            for (std::size_t t = 0; t < N; ++t) {
                const double x = static_cast<double>(t) - shift;
                if (x < 0.0 || x > static_cast<double>(N - 1)) continue;
                const auto lo = static_cast<std::size_t>(std::floor(x));
                const double a = x - static_cast<double>(lo);
                const double v = lo + 1 < N ? (1.0 - a) * e[lo] + a * e[lo + 1] : e[lo];
                dst[t] += amp * v;
            }
        }
    });
    return out;
}

}  // namespace thz
