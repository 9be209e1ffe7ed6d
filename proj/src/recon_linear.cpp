#include "thz/recon_linear.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace thz {

void StoppingRule::validate() const {
    if (!(tau > 1.0)) throw std::invalid_argument("StoppingRule: tau must exceed 1");
    if (!(delta >= 0.0)) throw std::invalid_argument("StoppingRule: delta must be nonnegative");
    if (k_max < 1) throw std::invalid_argument("StoppingRule: k_max must be >= 1");
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::Discrepancy: return "discrepancy";
        case StopReason::KMax: return "k_max";
        case StopReason::Stationary: return "stationary";
        case StopReason::Diverged: return "diverged";
    }
    return "unknown";
}

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

void require_matching(const ProjectionMatrix& P, const Sinogram& g, const char* what) {
    if (g.values.size() != P.rows()) {
        throw std::invalid_argument(std::string(what) + ": sinogram does not match projector");
    }
}

std::vector<double> residual(const ProjectionMatrix& P, const std::vector<double>& f, const Sinogram& g) {
    std::vector<double> r(P.rows());
    P.multiply(f, r);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = g.values[k] - r[k];
    return r;
}

double soft(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

}  // namespace

std::vector<double> ramp_filter_response(std::size_t n_padded, double spacing, FbpFilter filter, double cutoff) {
    if (n_padded < 2 || (n_padded & (n_padded - 1)) != 0) {
        throw std::invalid_argument("ramp_filter_response: padded length must be a power of two");
    }
    if (!(cutoff > 0.0 && cutoff <= 1.0)) throw std::invalid_argument("ramp filter: cutoff must lie in (0, 1]");
    // Spatial Ram-Lak kernel h(0) = 1/(4 ds^2), h(odd m) = -1/(m pi ds)^2.
    // Its transform avoids the DC offset of a sampled |nu| ramp.
    const std::size_t N = n_padded;
    std::unique_ptr<double, FftwFree> h(fftw_alloc_real(N));
    std::unique_ptr<fftw_complex, FftwFree> H(fftw_alloc_complex(N / 2 + 1));
    for (std::size_t k = 0; k < N; ++k) {
        const long long m = k <= N / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(N);
        double v = 0.0;
        if (m == 0) {
            v = 0.25 / (spacing * spacing);
        } else if (m % 2 != 0) {
            const double pm = std::numbers::pi * static_cast<double>(m) * spacing;
            v = -1.0 / (pm * pm);
        }
        h.get()[k] = v;
    }
    FftwPlan plan(fftw_plan_dft_r2c_1d(static_cast<int>(N), h.get(), H.get(), FFTW_ESTIMATE));
    fftw_execute(plan.get());

    std::vector<double> response(N / 2 + 1);
    for (std::size_t k = 0; k <= N / 2; ++k) {
        const double nu = static_cast<double>(k) / static_cast<double>(N / 2);
        double window = 0.0;
        if (nu <= cutoff) {
            window = filter == FbpFilter::RamLak ? 1.0 : 0.5 * (1.0 + std::cos(std::numbers::pi * nu / cutoff));
        }
        // the discrete convolution carries one factor of ds
        response[k] = H.get()[k][0] * window * spacing;
    }
    // the truncated kernel leaves O(1/N) at DC; the ramp itself is zero there
    response[0] = 0.0;
    return response;
}

Sinogram ramp_filter(const Sinogram& g, FbpFilter filter, double cutoff) {
    const auto& geo = g.geometry;
    if (!geo.offsets_uniform()) throw std::invalid_argument("ramp_filter: offsets must be uniformly spaced");
    const std::size_t n = geo.n_offsets();
    const std::size_t N = next_pow2(2 * n);
    const auto response = ramp_filter_response(N, geo.offset_spacing(), filter, cutoff);

    std::unique_ptr<double, FftwFree> buf(fftw_alloc_real(N));
    std::unique_ptr<fftw_complex, FftwFree> spec(fftw_alloc_complex(N / 2 + 1));
    FftwPlan fwd(fftw_plan_dft_r2c_1d(static_cast<int>(N), buf.get(), spec.get(), FFTW_ESTIMATE));
    FftwPlan inv(fftw_plan_dft_c2r_1d(static_cast<int>(N), spec.get(), buf.get(), FFTW_ESTIMATE));

    Sinogram out(geo);
    for (std::size_t j = 0; j < geo.n_angles(); ++j) {
        for (std::size_t k = 0; k < N; ++k) buf.get()[k] = k < n ? g.at(k, j) : 0.0;
        fftw_execute(fwd.get());
        for (std::size_t k = 0; k <= N / 2; ++k) {
            spec.get()[k][0] *= response[k];
            spec.get()[k][1] *= response[k];
        }
        fftw_execute(inv.get());
        for (std::size_t i = 0; i < n; ++i) out.at(i, j) = buf.get()[i] / static_cast<double>(N);
    }
    return out;
}

DensityImage fbp(const ProjectionMatrix& P, const Sinogram& g, FbpFilter filter, double cutoff) {
    require_matching(P, g, "fbp");
    const auto& geo = P.geometry();
    if (!geo.offsets_uniform() || !geo.angles_uniform()) {
        throw std::invalid_argument("fbp: geometry must be uniform in s and theta");
    }
    const Sinogram q = ramp_filter(g, filter, cutoff);
    DensityImage f = apply_back_projection(P, q);
    // sum_j dtheta q(x.u_j) covers the angular range n_theta * dtheta; the
    // inversion integrates over [0, pi), so full-circle data is halved.
    const double norm = std::numbers::pi / (static_cast<double>(geo.n_angles()) * geo.angle_spacing());
    for (double& v : f.values) v *= norm;
    return f;
}

DensityImage fbp(const Sinogram& g, const ImageGrid& grid, FbpFilter filter, double cutoff) {
    return fbp(build_projector(grid, g.geometry), g, filter, cutoff);
}

double default_landweber_stepsize(const ProjectionMatrix& P) {
    const double sigma = operator_norm_estimate(P, 500, 1e-10).value;
    if (!(sigma > 0.0)) throw std::invalid_argument("default_landweber_stepsize: zero operator");
    return 1.0 / (sigma * sigma);
}

ReconResult landweber(const ProjectionMatrix& P, const Sinogram& g, double gamma, const StoppingRule& stop,
                      LandweberVariant variant, double sparsity_weight, const IterateObserver& observer) {
    require_matching(P, g, "landweber");
    stop.validate();
    if (!(sparsity_weight >= 0.0)) throw std::invalid_argument("landweber: sparsity weight must be >= 0");
    if (variant == LandweberVariant::Plain && sparsity_weight > 0.0) {
        throw std::invalid_argument("landweber: sparsity weight requires the ista or fista variant");
    }
    const double sigma = operator_norm_estimate(P, 500, 1e-10).value;
    if (!(gamma > 0.0) || !(gamma * sigma * sigma < 2.0)) {
        throw std::invalid_argument("landweber: stepsize must satisfy 0 < gamma < 2 / ||R||^2");
    }

    const double scale = P.adjoint_scale();
    const double threshold = gamma * sparsity_weight;
    const std::size_t np = P.cols();
    ReconResult res{DensityImage(P.grid()), {}};
    auto& f = res.image.values;
    std::vector<double> y(np, 0.0);  // fista extrapolation point
    std::vector<double> grad(np);
    double t = 1.0;

    auto gradient_step = [&](const std::vector<double>& at, std::vector<double>& out) {
        const auto r = residual(P, at, g);
        P.multiply_transpose(r, grad);
        for (std::size_t p = 0; p < np; ++p) {
            const double v = at[p] + gamma * scale * grad[p];
            out[p] = variant == LandweberVariant::Plain ? v : soft(v, threshold);
        }
    };

    std::vector<double> next(np);
    for (std::size_t k = 0;; ++k) {
        const auto r = residual(P, f, g);
        const double rn = norm2(r);
        res.log.residuals.push_back(rn);
        res.log.final_index = k;
        if (observer) observer(k, res.image);
        if (rn <= stop.threshold()) {
            res.log.reason = StopReason::Discrepancy;
            break;
        }
        if (k >= stop.k_max) {
            res.log.reason = StopReason::KMax;
            break;
        }
        if (variant == LandweberVariant::Fista) {
            gradient_step(y, next);
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            for (std::size_t p = 0; p < np; ++p) y[p] = next[p] + beta * (next[p] - f[p]);
            t = t_next;
            f.swap(next);
        } else if (variant == LandweberVariant::Plain) {
            // reuse the residual already computed for the stopping test
            P.multiply_transpose(r, grad);
            for (std::size_t p = 0; p < np; ++p) f[p] += gamma * scale * grad[p];
        } else {
            gradient_step(f, next);
            f.swap(next);
        }
        res.log.stepsizes.push_back(gamma);
    }
    return res;
}

DensityImage tikhonov(const ProjectionMatrix& P, const Sinogram& g, double beta, double cg_tol, std::size_t cg_max) {
    require_matching(P, g, "tikhonov");
    if (!(beta > 0.0)) throw std::invalid_argument("tikhonov: beta must be positive");
    if (!(cg_tol > 0.0) || cg_max < 1) throw std::invalid_argument("tikhonov: invalid CG settings");

    const std::size_t np = P.cols();
    const double shift = beta * P.grid().pixel_area();
    std::vector<double> tmp(P.rows());
    auto normal_op = [&](const std::vector<double>& x, std::vector<double>& out) {
        P.multiply(x, tmp);
        P.multiply_transpose(tmp, out);
        for (std::size_t p = 0; p < np; ++p) out[p] += shift * x[p];
    };

    DensityImage f(P.grid());
    std::vector<double> b(np);
    P.multiply_transpose(g.values, b);
    const double bn = norm2(b);
    if (bn == 0.0) return f;

    auto& x = f.values;
    std::vector<double> r = b;
    std::vector<double> p = r;
    std::vector<double> Ap(np);
    double rr = dot(r, r);
    for (std::size_t it = 0; it < cg_max && std::sqrt(rr) > cg_tol * bn; ++it) {
        normal_op(p, Ap);
        const double alpha = rr / dot(p, Ap);
        for (std::size_t k = 0; k < np; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        const double rr_next = dot(r, r);
        const double mu = rr_next / rr;
        for (std::size_t k = 0; k < np; ++k) p[k] = r[k] + mu * p[k];
        rr = rr_next;
    }
    return f;
}

DensityImage contour(const ProjectionMatrix& P, const Sinogram& g) {
    require_matching(P, g, "contour");
    const auto& geo = P.geometry();
    const std::size_t n = geo.n_offsets();
    if (n < 3) throw std::invalid_argument("contour: need at least three offsets");
    const double ds = geo.offset_spacing();
    const double inv = 1.0 / (ds * ds);
    Sinogram d2(geo);
    for (std::size_t j = 0; j < geo.n_angles(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
            d2.at(i, j) = -(g.at(c - 1, j) - 2.0 * g.at(c, j) + g.at(c + 1, j)) * inv;
        }
    }
    return apply_back_projection(P, d2);
}

}  // namespace thz
