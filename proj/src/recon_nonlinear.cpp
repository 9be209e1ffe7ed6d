#include "thz/recon_nonlinear.hpp"

#include <cmath>
#include <stdexcept>

namespace thz {

void NonlinearSolveConfig::validate() const {
    stop.validate();
    if (stepsize_mode == StepsizeMode::Constant && !(gamma > 0.0)) {
        throw std::invalid_argument("NonlinearSolveConfig: constant stepsize must be positive");
    }
    if (!(divergence_factor > 1.0)) throw std::invalid_argument("NonlinearSolveConfig: divergence factor must exceed 1");
}

ReconResult nonlinear_landweber(const ForwardContext& ctx, const Sinogram& g, const DensityImage& f0,
                                const NonlinearSolveConfig& cfg, const IterateObserver& observer) {
    cfg.validate();
    if (g.values.size() != ctx.detector().size()) {
        throw std::invalid_argument("nonlinear_landweber: data does not match the detector geometry");
    }
    for (double v : g.values) {
        if (!(v > 0.0)) throw std::invalid_argument("nonlinear_landweber: data must be positive ratios");
    }
    if (!(f0.grid == ctx.grid())) throw std::invalid_argument("nonlinear_landweber: initial guess grid mismatch");

    ReconResult res{f0, {}};
    auto& f = res.image;
    double initial = 0.0;
    Sinogram diff(ctx.detector());
    for (std::size_t k = 0;; ++k) {
        const BeamLinearization lin(ctx, f);
        const Sinogram Ff = lin.forward();
        for (std::size_t r = 0; r < diff.values.size(); ++r) diff.values[r] = g.values[r] - Ff.values[r];
        const double rn = norm2(diff.values);
        if (k == 0) initial = rn;
        res.log.residuals.push_back(rn);
        res.log.final_index = k;
        if (observer) observer(k, f);

        if (rn <= cfg.stop.threshold()) {
            res.log.reason = StopReason::Discrepancy;
            break;
        }
        if (k > 0 && rn > cfg.divergence_factor * initial) {
            res.log.reason = StopReason::Diverged;
            break;
        }
        if (k >= cfg.stop.k_max) {
            res.log.reason = StopReason::KMax;
            break;
        }

        const DensityImage s = lin.adjoint(diff);
        double gamma = cfg.gamma;
        if (cfg.stepsize_mode == StepsizeMode::SteepestDescent) {
            const double num = image_inner(s, s);
            const Sinogram Js = lin.apply(s);
            const double den = sinogram_inner(Js, Js);
            if (den < 1e-30) {
                res.log.reason = StopReason::Stationary;
                break;
            }
            gamma = num / den;
        }
        for (std::size_t p = 0; p < f.values.size(); ++p) {
            f.values[p] += gamma * s.values[p];
            if (cfg.nonneg_projection && f.values[p] < 0.0) f.values[p] = 0.0;
        }
        res.log.stepsizes.push_back(gamma);
    }
    return res;
}

}  // namespace thz
