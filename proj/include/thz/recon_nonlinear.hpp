#pragma once

#include "thz/beam.hpp"
#include "thz/recon_linear.hpp"

namespace thz {

enum class StepsizeMode { Constant, SteepestDescent };

struct NonlinearSolveConfig {
    StepsizeMode stepsize_mode = StepsizeMode::SteepestDescent;
    double gamma = 0.0;  ///< used only in Constant mode
    StoppingRule stop;
    bool nonneg_projection = false;
    /// abort with StopReason::Diverged once the residual exceeds this multiple
    /// of the initial residual
    double divergence_factor = 10.0;

    void validate() const;
};

/// Nonlinear Landweber iteration f_{k+1} = f_k + gamma_k F'(f_k)*(g - F(f_k)).
///
/// In steepest-descent mode gamma_k = ||s_k||^2 / ||F'(f_k) s_k||^2 with the
/// weighted image/sinogram norms, s_k = F'(f_k)*(g - F(f_k)). The logged
/// residuals are Euclidean, matching the delta reported by add_noise.
ReconResult nonlinear_landweber(const ForwardContext& ctx, const Sinogram& g, const DensityImage& f0,
                                const NonlinearSolveConfig& cfg, const IterateObserver& observer = {});

}  // namespace thz
