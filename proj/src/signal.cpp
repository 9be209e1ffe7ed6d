#include "thz/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thz {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t m = -radius; m <= radius; ++m) {
        const double v = std::exp(-0.5 * static_cast<double>(m * m) / (sigma * sigma));
        k[static_cast<std::size_t>(m + radius)] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
std::size_t reflect_index(std::ptrdiff_t idx, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = idx % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

std::size_t wrap_index(std::ptrdiff_t idx, std::size_t n) {
    const auto nn = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t m = idx % nn;
    if (m < 0) m += nn;
    return static_cast<std::size_t>(m);
}

}  // namespace

PulseTrace::PulseTrace(double t0_, double dt_, std::vector<double> s) : t0(t0_), dt(dt_), samples(std::move(s)) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t0)) {
        throw std::invalid_argument("PulseTrace: dt must be positive and finite");
    }
    if (samples.size() < 2) throw std::invalid_argument("PulseTrace: need at least two samples");
    for (double v : samples) {
        if (!std::isfinite(v)) throw std::invalid_argument("PulseTrace: non-finite sample");
    }
}

RawDataSet::RawDataSet(ScanGeometry g, std::vector<PulseTrace> t, PulseTrace ref)
    : geometry(std::move(g)), traces(std::move(t)), reference(std::move(ref)) {
    if (traces.size() != geometry.size()) {
        throw std::invalid_argument("RawDataSet: trace count does not match geometry");
    }
}

PulseTrace synthetic_reference_pulse(double t0, double dt, std::size_t n_samples, double tc, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("synthetic_reference_pulse: tau must be positive");
    std::vector<double> e(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const double a = (t - tc) / tau;
        const double b = (t - tc - 2.0 * tau) / (2.0 * tau);
        e[k] = std::exp(-a * a) - 0.3 * std::exp(-b * b);
    }
    return PulseTrace(t0, dt, std::move(e));
}

double integrate_pulse(const PulseTrace& tr) {
    const auto& e = tr.samples;
    double acc = 0.5 * (e.front() + e.back());
    for (std::size_t k = 1; k + 1 < e.size(); ++k) acc += e[k];
    return acc * tr.dt;
}

double pulse_energy(const PulseTrace& tr) {
    const auto& e = tr.samples;
    double acc = 0.5 * (e.front() * e.front() + e.back() * e.back());
    for (std::size_t k = 1; k + 1 < e.size(); ++k) acc += e[k] * e[k];
    return acc * tr.dt;
}

PulseTrace average_traces(const std::vector<PulseTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("average_traces: empty list");
    const auto& first = traces.front();
    std::vector<double> sum(first.samples.size(), 0.0);
    for (const auto& tr : traces) {
        if (tr.t0 != first.t0 || tr.dt != first.dt || tr.samples.size() != first.samples.size()) {
            throw std::invalid_argument("average_traces: traces use different sampling");
        }
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += tr.samples[k];
    }
    const double inv = 1.0 / static_cast<double>(traces.size());
    for (double& v : sum) v *= inv;
    return PulseTrace(first.t0, first.dt, std::move(sum));
}

PulseTrace extract_main_peak(const PulseTrace& tr, double window_half_width) {
    if (!(window_half_width > 0.0)) {
        throw std::invalid_argument("extract_main_peak: window half-width must be positive");
    }
    const auto& e = tr.samples;
    std::size_t peak = 0;
    for (std::size_t k = 1; k < e.size(); ++k) {
        if (std::abs(e[k]) > std::abs(e[peak])) peak = k;
    }
    const auto half = static_cast<std::size_t>(std::llround(window_half_width / tr.dt));
    const std::size_t lo = peak > half ? peak - half : 0;
    const std::size_t hi = std::min(e.size() - 1, peak + half);
    std::vector<double> sub(e.begin() + static_cast<std::ptrdiff_t>(lo), e.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    if (sub.size() < 2) {
        // a window narrower than one sample still keeps a valid trace
        if (hi + 1 < e.size()) {
            sub.push_back(e[hi + 1]);
        } else {
            sub.insert(sub.begin(), e[lo - 1]);
            return PulseTrace(tr.time(lo - 1), tr.dt, std::move(sub));
        }
    }
    return PulseTrace(tr.time(lo), tr.dt, std::move(sub));
}

Sinogram build_ratio_sinogram(const RawDataSet& data, DataMode mode) {
    const double ref = mode == DataMode::P ? integrate_pulse(data.reference) : pulse_energy(data.reference);
    if (ref == 0.0) throw std::invalid_argument("build_ratio_sinogram: reference integral is zero");
    Sinogram out(data.geometry);
    for (std::size_t r = 0; r < data.traces.size(); ++r) {
        const auto& tr = data.traces[r];
        out.values[r] = mode == DataMode::P ? std::abs(integrate_pulse(tr) / ref) : pulse_energy(tr) / ref;
    }
    return out;
}

Sinogram preprocess(const Sinogram& s, const PreprocessOptions& opts) {
    if (!(opts.clip_max > 0.0)) throw std::invalid_argument("preprocess: clip_max must be positive");
    if (!(opts.scale > 0.0) || !std::isfinite(opts.scale)) throw std::invalid_argument("preprocess: scale must be positive");
    if (!(opts.sigma_s >= 0.0) || !(opts.sigma_theta >= 0.0)) {
        throw std::invalid_argument("preprocess: sigmas must be nonnegative");
    }
    Sinogram out = s;
    for (double& v : out.values) v = std::clamp(v, 0.0, opts.clip_max) * opts.scale;

    const std::size_t n_off = s.geometry.n_offsets();
    const std::size_t n_ang = s.geometry.n_angles();
    if (opts.sigma_s > 0.0) {
        const auto k = gaussian_kernel(opts.sigma_s);
        const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
        std::vector<double> line(n_off);
        for (std::size_t j = 0; j < n_ang; ++j) {
            for (std::size_t i = 0; i < n_off; ++i) {
                double acc = 0.0;
                for (std::ptrdiff_t m = -radius; m <= radius; ++m) {
                    acc += k[static_cast<std::size_t>(m + radius)] *
                           out.at(reflect_index(static_cast<std::ptrdiff_t>(i) + m, n_off), j);
                }
                line[i] = acc;
            }
            for (std::size_t i = 0; i < n_off; ++i) out.at(i, j) = line[i];
        }
    }
    if (opts.sigma_theta > 0.0) {
        const auto k = gaussian_kernel(opts.sigma_theta);
        const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
        std::vector<double> line(n_ang);
        for (std::size_t i = 0; i < n_off; ++i) {
            for (std::size_t j = 0; j < n_ang; ++j) {
                double acc = 0.0;
                for (std::ptrdiff_t m = -radius; m <= radius; ++m) {
                    acc += k[static_cast<std::size_t>(m + radius)] *
                           out.at(i, wrap_index(static_cast<std::ptrdiff_t>(j) + m, n_ang));
                }
                line[j] = acc;
            }
            for (std::size_t j = 0; j < n_ang; ++j) out.at(i, j) = line[j];
        }
    }
    return out;
}

LogResult log_transform(const Sinogram& s, DataMode mode) {
    LogResult res{Sinogram(s.geometry), 0};
    const double factor = mode == DataMode::P ? -2.0 : -1.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        double v = s.values[k];
        if (!(v >= kLogFloor)) {
            v = kLogFloor;
            ++res.floored;
        }
        res.data.values[k] = factor * std::log(v);
    }
    return res;
}

}  // namespace thz
