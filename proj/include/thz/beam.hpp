#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "thz/geometry.hpp"
#include "thz/radon.hpp"
#include "thz/signal.hpp"

namespace thz {

/// C^2 bounded replacement for exp(-x): exp(-x) for x >= 0 and
/// 1 / (1 + x + x^2 / 2) for x < 0.
double smoothed_exp(double x);
double smoothed_exp_d1(double x);
double smoothed_exp_d2(double x);

/// Discretized beam weight function w on a symmetric uniform grid.
///
/// The quadrature convention is sum_k w_k * spacing == 1. A single-sample
/// profile (the delta limit) carries spacing 1 and weight 1.
class BeamProfile {
public:
    BeamProfile(std::vector<double> rel_offsets, std::vector<double> weights, double spacing);

    static BeamProfile delta();

    const std::vector<double>& rel_offsets() const { return rel_offsets_; }
    const std::vector<double>& weights() const { return weights_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return weights_.size(); }
    /// Number of samples on each side of the center.
    std::size_t half_count() const { return weights_.size() / 2; }
    double half_width() const { return rel_offsets_.back(); }

private:
    std::vector<double> rel_offsets_;
    std::vector<double> weights_;
    double spacing_;
};

/// Gaussian exp(-4 ln2 r^2 / fwhm^2) sampled at n_samples points on
/// [-half_width, half_width] and normalized to unit integral.
BeamProfile sample_gaussian_profile(double fwhm, double half_width, std::size_t n_samples);

struct MaterialParams {
    double n = 1.5;        ///< refractive index of the material
    double n0 = 1.0;       ///< refractive index of air
    double alpha_m = 1.0;  ///< absorption value of the material
    double c0 = 1.0;       ///< speed of light in grid units per time unit

    void validate() const;
    /// (n - n0) / (alpha_M c0): delay per unit of Radon value.
    double delay_per_radon() const { return (n - n0) / (alpha_m * c0); }
};

/// Everything needed to evaluate the full-beam operator: a fine projector on
/// a refined offset grid that contains every s_i + r_k, plus the profile.
///
/// Refined offset q = i * oversampling + half_count + k (k in [-K, K]) is the
/// sample s_i + r_k. Immutable once built; safe to share across threads.
class ForwardContext {
public:
    /// `profile` spacing must equal detector spacing / oversampling unless the
    /// profile is the single-sample delta.
    ForwardContext(const ImageGrid& grid, ScanGeometry detector, BeamProfile profile, std::size_t oversampling);

    const ImageGrid& grid() const { return fine_->grid(); }
    const ScanGeometry& detector() const { return detector_; }
    const BeamProfile& profile() const { return profile_; }
    const ProjectionMatrix& fine_projector() const { return *fine_; }
    std::size_t oversampling() const { return oversampling_; }
    double fine_spacing() const { return fine_->geometry().offset_spacing(); }

    /// Fine-grid offset index of detector offset i and profile sample k.
    std::size_t fine_index(std::size_t i, std::size_t k) const { return i * oversampling_ + k; }

private:
    ScanGeometry detector_;
    BeamProfile profile_;
    std::size_t oversampling_;
    std::shared_ptr<const ProjectionMatrix> fine_;
};

/// Builds a context with a Gaussian profile sampled at the refined spacing.
/// The half-width is rounded up to a whole number of refined samples.
ForwardContext make_gaussian_context(const ImageGrid& grid, const ScanGeometry& detector, double fwhm,
                                     double half_width, std::size_t oversampling = 4);

/// F(f)(i,j) = sum_k w_k E(Rf(s_i + r_k, theta_j) / 2) dr.
Sinogram forward_full_beam(const ForwardContext& ctx, const DensityImage& f);

/// F'(f) h.
Sinogram jacobian_apply(const ForwardContext& ctx, const DensityImage& f, const DensityImage& h);

/// F'(f)* g, the adjoint of jacobian_apply w.r.t. image_inner/sinogram_inner.
DensityImage jacobian_adjoint(const ForwardContext& ctx, const DensityImage& f, const Sinogram& g);

/// Radon transform of f on the refined offset grid; reused by the solver to
/// avoid recomputing it for the derivative and its adjoint.
class BeamLinearization {
public:
    BeamLinearization(const ForwardContext& ctx, const DensityImage& f);

    Sinogram forward() const;
    Sinogram apply(const DensityImage& h) const;
    DensityImage adjoint(const Sinogram& g) const;

private:
    const ForwardContext& ctx_;
    std::vector<double> fine_radon_;
};

struct DelayResult {
    Sinogram delay;
    /// Pixels whose value is neither 0 nor alpha_M (tolerance 1e-6 alpha_M).
    std::size_t nonuniform_pixels = 0;
};

/// Delay (n - n0) / (alpha_M c0) * Rf of a single-material sample.
DelayResult compute_delay(const ProjectionMatrix& P, const DensityImage& f, const MaterialParams& m);

/// One simulated trace per detector cell, all on the reference time axis.
struct PulseEnsemble {
    ScanGeometry geometry;
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n_samples = 0;
    std::vector<double> samples;  ///< cell (i,j) occupies [(j*n_off+i)*n_samples, +n_samples)

    PulseTrace trace(std::size_t offset, std::size_t angle) const;
};

/// E_ij(t) = sum_k w_k e_ref(t - dT(s_i+r_k, theta_j)) E(Rf/2) dr, with the
/// shifted reference linearly interpolated and zero outside its support.
PulseEnsemble simulate_pulse_ensemble(const ForwardContext& ctx, const DensityImage& f, const PulseTrace& e_ref,
                                      const MaterialParams& m);

}  // namespace thz
