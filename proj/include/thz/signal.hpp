#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "thz/geometry.hpp"

namespace thz {

/// Uniformly sampled electric field E(t), t = t0 + k dt.
struct PulseTrace {
    PulseTrace(double t0, double dt, std::vector<double> samples);

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double duration() const { return dt * static_cast<double>(samples.size() - 1); }

    double t0;
    double dt;
    std::vector<double> samples;
};

/// Measured traces for every (offset, angle) cell plus the air reference.
struct RawDataSet {
    RawDataSet(ScanGeometry g, std::vector<PulseTrace> t, PulseTrace ref);

    const PulseTrace& trace(std::size_t offset, std::size_t angle) const {
        return traces[angle * geometry.n_offsets() + offset];
    }

    ScanGeometry geometry;
    std::vector<PulseTrace> traces;  ///< offset-fastest
    PulseTrace reference;
};

enum class DataMode { P, I };

/// Bipolar test pulse exp(-((t-tc)/tau)^2) - 0.3 exp(-((t-tc-2tau)/(2tau))^2)
/// sampled at t0 + k dt.
PulseTrace synthetic_reference_pulse(double t0, double dt, std::size_t n_samples, double tc, double tau);

/// Trapezoidal integral of E dt.
double integrate_pulse(const PulseTrace& tr);
/// Trapezoidal integral of E^2 dt.
double pulse_energy(const PulseTrace& tr);

PulseTrace average_traces(const std::vector<PulseTrace>& traces);

/// Sub-trace of half-width `window_half_width` around the sample of largest
/// |E|, clipped to the trace.
PulseTrace extract_main_peak(const PulseTrace& tr, double window_half_width);

/// Mode P: |P_ij / P_ref|. Mode I: I_ij / I_ref.
Sinogram build_ratio_sinogram(const RawDataSet& data, DataMode mode);

struct PreprocessOptions {
    double clip_max = 1.5;
    double scale = 1.0;
    double sigma_s = 0.0;      ///< Gaussian width along offsets, in samples
    double sigma_theta = 0.0;  ///< Gaussian width along angles, in samples
};

/// Clip to [0, clip_max], scale, then separable Gaussian smoothing
/// (reflective in s, periodic in theta).
Sinogram preprocess(const Sinogram& s, const PreprocessOptions& opts);

inline constexpr double kLogFloor = 1e-12;

struct LogResult {
    Sinogram data;
    std::size_t floored = 0;  ///< values below kLogFloor that were raised to it
};

/// Mode P: -2 ln(value). Mode I: -ln(value).
LogResult log_transform(const Sinogram& s, DataMode mode);

}  // namespace thz
