#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>

#include "cli.hpp"
#include "thz/beam.hpp"
#include "thz/phantoms.hpp"
#include "thz/radon.hpp"
#include "thz/recon_linear.hpp"

namespace thz::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::vector<double> random_values(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

CheckResult check_adjoint() {
    const ImageGrid grid(81);
    const auto geo = ScanGeometry::uniform(360, 71);
    const auto P = build_projector(grid, geo);
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
        const DensityImage f(grid, random_values(grid.pixel_count(), rng, -1.0, 1.0));
        const Sinogram g(geo, random_values(geo.size(), rng, -1.0, 1.0));
        const Sinogram Rf = apply_radon(P, f);
        const DensityImage Rg = apply_back_projection(P, g);
        const double lhs = sinogram_inner(Rf, g);
        const double rhs = image_inner(f, Rg);
        const double scale = std::sqrt(sinogram_inner(Rf, Rf) * sinogram_inner(g, g));
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return {"adjoint", worst <= 1e-10, fmt(worst), "<= 1e-10"};
}

struct BeamFixture {
    ImageGrid grid{31};
    ScanGeometry geo = ScanGeometry::uniform(36, 21);
    ForwardContext ctx = make_gaussian_context(grid, geo, 0.1, 0.2, 4);
};

double sinogram_norm(const Sinogram& s) { return std::sqrt(sinogram_inner(s, s)); }

CheckResult check_taylor() {
    const BeamFixture fx;
    std::mt19937_64 rng(12);
    const DensityImage f(fx.grid, random_values(fx.grid.pixel_count(), rng, 0.0, 1.0));
    const DensityImage h(fx.grid, random_values(fx.grid.pixel_count(), rng, 0.0, 1.0));
    const Sinogram F0 = forward_full_beam(fx.ctx, f);
    const Sinogram J = jacobian_apply(fx.ctx, f, h);
    const std::vector<double> ts{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> lx, ly;
    for (double t : ts) {
        DensityImage ft = f;
        for (std::size_t p = 0; p < ft.values.size(); ++p) ft.values[p] += t * h.values[p];
        Sinogram rem = forward_full_beam(fx.ctx, ft);
        for (std::size_t r = 0; r < rem.values.size(); ++r) rem.values[r] -= F0.values[r] + t * J.values[r];
        lx.push_back(std::log(t));
        ly.push_back(std::log(sinogram_norm(rem)));
    }
    const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
    const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    const double slope = sxy / sxx;
    return {"taylor", std::abs(slope - 2.0) <= 0.1, fmt(slope), "2.0 +- 0.1"};
}

CheckResult check_jacobian_adjoint() {
    const BeamFixture fx;
    std::mt19937_64 rng(13);
    const DensityImage f(fx.grid, random_values(fx.grid.pixel_count(), rng, 0.0, 1.0));
    const DensityImage h(fx.grid, random_values(fx.grid.pixel_count(), rng, -1.0, 1.0));
    const Sinogram g(fx.geo, random_values(fx.geo.size(), rng, -1.0, 1.0));
    const Sinogram Jh = jacobian_apply(fx.ctx, f, h);
    const DensityImage Jg = jacobian_adjoint(fx.ctx, f, g);
    const double lhs = sinogram_inner(Jh, g);
    const double rhs = image_inner(h, Jg);
    const double err = std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
    return {"jacobian-adjoint", err <= 1e-8, fmt(err), "<= 1e-8"};
}

CheckResult check_disk() {
    const ImageGrid grid(81);
    const auto geo = ScanGeometry::uniform(360, 71);
    const auto P = build_projector(grid, geo);
    const double rho = 0.5;
    const double h = grid.pixel_side();
    const Sinogram Rf = apply_radon(P, disk_phantom(grid, {0.0, 0.0}, rho, 1.0));
    const Sinogram exact = analytic_disk_sinogram(geo, {0.0, 0.0}, rho, 1.0);
    double radon_err = 0.0;
    for (std::size_t j = 0; j < geo.n_angles(); ++j) {
        for (std::size_t i = 0; i < geo.n_offsets(); ++i) {
            if (std::abs(geo.offsets()[i]) > rho - 2.0 * h) continue;
            radon_err = std::max(radon_err, std::abs(Rf.at(i, j) - exact.at(i, j)));
        }
    }
    const DensityImage rec = fbp(P, exact);
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t row = 0; row < grid.size(); ++row) {
        for (std::size_t col = 0; col < grid.size(); ++col) {
            const double r = std::hypot(grid.center_x(col), grid.center_y(row));
            if (r <= rho - 2.0 * h) {
                in_sum += rec.at(row, col);
                ++in_n;
            } else if (r >= rho + 2.0 * h && r <= 0.9) {
                out_sum += rec.at(row, col);
                ++out_n;
            }
        }
    }
    const double in_mean = in_sum / static_cast<double>(in_n);
    const double out_mean = out_sum / static_cast<double>(out_n);
    const bool ok = radon_err <= 2.0 * h && std::abs(in_mean - 1.0) <= 0.1 && std::abs(out_mean) <= 0.05;
    return {"disk", ok, "radon " + fmt(radon_err) + ", fbp in " + fmt(in_mean) + " out " + fmt(out_mean),
            "<= " + fmt(2.0 * h) + ", 1+-0.1, 0+-0.05"};
}

// The x < 0 branch 1/(1+x+x^2/2) has sup|E'| = 9/(4 sqrt 3) at x = 1/sqrt(3) - 1
// and sup|E''| = 4 at x = -1.
CheckResult check_smoothness() {
    const double eps = 1e-300;
    const double jump = std::max({std::abs(smoothed_exp(-eps) - smoothed_exp(0.0)),
                                  std::abs(smoothed_exp_d1(-eps) - smoothed_exp_d1(0.0)),
                                  std::abs(smoothed_exp_d2(-eps) - smoothed_exp_d2(0.0))});
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    const std::size_t n = 1000001;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = -50.0 + 100.0 * static_cast<double>(k) / static_cast<double>(n - 1);
        m0 = std::max(m0, std::abs(smoothed_exp(x)));
        m1 = std::max(m1, std::abs(smoothed_exp_d1(x)));
        m2 = std::max(m2, std::abs(smoothed_exp_d2(x)));
    }
    const double b1 = 9.0 / (4.0 * std::sqrt(3.0));
    const double slack = 1e-12;
    const bool ok = jump <= 1e-12 && m0 <= 2.0 + slack && m1 <= b1 + slack && m2 <= 4.0 + slack;
    return {"smoothness", ok,
            "jump " + fmt(jump) + ", sup " + fmt(m0) + "/" + fmt(m1) + "/" + fmt(m2),
            "<= 1e-12, <= 2/" + fmt(b1) + "/4"};
}

const std::vector<std::pair<std::string, std::function<CheckResult()>>>& registry() {
    static const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks{
        {"adjoint", check_adjoint},
        {"taylor", check_taylor},
        {"jacobian-adjoint", check_jacobian_adjoint},
        {"disk", check_disk},
        {"smoothness", check_smoothness},
    };
    return checks;
}

}  // namespace

std::vector<std::string> verify_check_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : registry()) names.push_back(name);
    return names;
}

std::vector<CheckResult> run_verify(const std::vector<std::string>& only) {
    std::vector<CheckResult> results;
    for (const auto& [name, fn] : registry()) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        results.push_back(fn());
    }
    return results;
}

}  // namespace thz::cli
