#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "thz/geometry.hpp"
#include "thz/radon.hpp"

namespace thz {

/// Discrepancy principle: stop at the first k with ||residual_k|| <= tau * delta,
/// or at k_max.
struct StoppingRule {
    double tau = 1.5;
    double delta = 0.0;
    std::size_t k_max = 1;

    void validate() const;
    double threshold() const { return tau * delta; }
};

enum class StopReason { Discrepancy, KMax, Stationary, Diverged };

std::string_view to_string(StopReason r);

/// residuals[k] is the Euclidean data residual of iterate k (k = 0 is the
/// initial guess); stepsizes[k] is the step used to go from k to k + 1.
struct IterationLog {
    std::vector<double> residuals;
    std::vector<double> stepsizes;
    StopReason reason = StopReason::KMax;
    std::size_t final_index = 0;
};

struct ReconResult {
    DensityImage image;
    IterationLog log;
};

/// Called with every iterate that gets a residual evaluation.
using IterateObserver = std::function<void(std::size_t k, const DensityImage& f)>;

enum class FbpFilter { RamLak, Hann };

/// Frequency response (length n_padded / 2 + 1) of the discrete ramp filter
/// with the given apodization, for sample spacing `spacing`.
std::vector<double> ramp_filter_response(std::size_t n_padded, double spacing, FbpFilter filter, double cutoff);

/// Ramp-filters every projection along s (zero-padded to the next power of
/// two >= 2 * n_offsets).
Sinogram ramp_filter(const Sinogram& g, FbpFilter filter, double cutoff);

DensityImage fbp(const ProjectionMatrix& P, const Sinogram& g, FbpFilter filter = FbpFilter::RamLak,
                 double cutoff = 1.0);
DensityImage fbp(const Sinogram& g, const ImageGrid& grid, FbpFilter filter = FbpFilter::RamLak, double cutoff = 1.0);

enum class LandweberVariant { Plain, Ista, Fista };

/// f_{k+1} = S(f_k + gamma R*(g - R f_k)) from f_0 = 0; S is the identity
/// (plain) or soft-thresholding at gamma * sparsity_weight (ista, fista with
/// Nesterov momentum). Requires 0 < gamma < 2 / ||R||^2.
ReconResult landweber(const ProjectionMatrix& P, const Sinogram& g, double gamma, const StoppingRule& stop,
                      LandweberVariant variant = LandweberVariant::Plain, double sparsity_weight = 0.0,
                      const IterateObserver& observer = {});

/// Stepsize 1 / ||R||^2 from a converged power iteration.
double default_landweber_stepsize(const ProjectionMatrix& P);

/// Minimizer of ||A f - g||_2^2 + beta ||f||_{L2}^2 by conjugate gradients
/// on (A^T A + beta h^2 I) f = A^T g, where A holds the chord lengths and
/// h^2 is the pixel area.
DensityImage tikhonov(const ProjectionMatrix& P, const Sinogram& g, double beta, double cg_tol = 1e-8,
                      std::size_t cg_max = 1000);

/// Second difference of the data along s (one-sided at the ends), negated,
/// then back-projected: an edge map of the density.
DensityImage contour(const ProjectionMatrix& P, const Sinogram& g);

}  // namespace thz
