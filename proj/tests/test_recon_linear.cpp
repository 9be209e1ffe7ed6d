#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "support/oracles.hpp"
#include "thz/phantoms.hpp"
#include "thz/recon_linear.hpp"

using namespace thz;

namespace {

struct Setup {
    ImageGrid grid;
    ScanGeometry geo;
    ProjectionMatrix P;
    Setup(std::size_t n, std::size_t na, std::size_t ns)
        : grid(n), geo(ScanGeometry::uniform(na, ns)), P(build_projector(grid, geo)) {}
};

double mean_abs_where(const DensityImage& f, double rmin, double rmax) {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t r = 0; r < f.grid.size(); ++r)
        for (std::size_t q = 0; q < f.grid.size(); ++q) {
            const double d = std::hypot(f.grid.center_x(q), f.grid.center_y(r));
            if (d >= rmin && d <= rmax) {
                s += std::abs(f.at(r, q));
                ++c;
            }
        }
    return s / static_cast<double>(c);
}

double mean_where(const DensityImage& f, double rmin, double rmax) {
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t r = 0; r < f.grid.size(); ++r)
        for (std::size_t q = 0; q < f.grid.size(); ++q) {
            const double d = std::hypot(f.grid.center_x(q), f.grid.center_y(r));
            if (d >= rmin && d <= rmax) {
                s += f.at(r, q);
                ++c;
            }
        }
    return s / static_cast<double>(c);
}

// Gaussian elimination with partial pivoting
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= m * A[c][k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
        x[r] = s / A[r][r];
    }
    return x;
}

StoppingRule kmax(std::size_t k) {
    StoppingRule s;
    s.k_max = k;
    return s;
}

}  // namespace

TEST_CASE("zero data gives a zero image") {
    const Setup S(21, 24, 15);
    const Sinogram zero(S.geo);
    const double gamma = default_landweber_stepsize(S.P);
    CHECK(norm2(fbp(S.P, zero).values) == 0.0);
    CHECK(norm2(tikhonov(S.P, zero, 10.0).values) == 0.0);
    CHECK(norm2(contour(S.P, zero).values) == 0.0);
    const auto lw = landweber(S.P, zero, gamma, kmax(50));
    CHECK(norm2(lw.image.values) == 0.0);
    CHECK(lw.log.reason == StopReason::Discrepancy);
    CHECK(lw.log.final_index == 0);
}

TEST_CASE("ramp filter response") {
    const std::size_t N = 256;
    const double ds = 2.0 / 71;
    const auto H = ramp_filter_response(N, ds, FbpFilter::RamLak, 1.0);
    REQUIRE(H.size() == N / 2 + 1);
    CHECK(H[0] == 0.0);
    for (std::size_t k = 16; k <= 96; k += 8) {
        const double nu = static_cast<double>(k) / (static_cast<double>(N) * ds);
        CHECK(H[k] == doctest::Approx(nu).epsilon(0.02));
    }
    const auto hann = ramp_filter_response(N, ds, FbpFilter::Hann, 0.5);
    CHECK(hann[N / 4 + 1] == 0.0);
    CHECK(hann[N / 2] == 0.0);
    CHECK(hann[8] < H[8]);
    CHECK_THROWS(ramp_filter_response(100, ds, FbpFilter::RamLak, 1.0));
    CHECK_THROWS(ramp_filter_response(N, ds, FbpFilter::RamLak, 0.0));

    // a constant projection loses its mean away from the padded edges
    const auto geo = ScanGeometry::uniform(1, 31);
    const auto q = ramp_filter(Sinogram(geo, std::vector<double>(31, 1.0)), FbpFilter::RamLak, 1.0);
    CHECK(std::abs(q.at(15, 0)) < 0.05 * 1.0 / geo.offset_spacing());
}

TEST_CASE("filtered back-projection of a disk") {
    const Setup S(81, 360, 71);
    const double rho = 0.5, h = S.grid.pixel_side();
    const auto g = analytic_disk_sinogram(S.geo, {0.0, 0.0}, rho, 1.0);
    const auto f = fbp(S.P, g);
    CHECK(mean_where(f, 0.0, rho - 2 * h) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(mean_where(f, rho + 2 * h, 0.9)) <= 0.05);
    const auto hann = fbp(S.P, g, FbpFilter::Hann, 1.0);
    CHECK(mean_where(hann, 0.0, rho - 2 * h) == doctest::Approx(1.0).epsilon(0.1));
    CHECK_THROWS(fbp(S.P, Sinogram(ScanGeometry::uniform(10, 71))));
    CHECK_THROWS(fbp(Sinogram(ScanGeometry({0.0, 0.1, 0.5}, {-0.5, 0.0, 0.5})), S.grid));
}

TEST_CASE("landweber residuals decrease on exact data") {
    const Setup S(41, 90, 35);
    const auto g = apply_radon(S.P, disk_phantom(S.grid, {0.1, 0.0}, 0.4, 1.0));
    const auto res = landweber(S.P, g, default_landweber_stepsize(S.P), kmax(100));
    CHECK(res.log.reason == StopReason::KMax);
    CHECK(res.log.residuals.size() == 101);
    CHECK(res.log.stepsizes.size() == 100);
    for (std::size_t k = 1; k < res.log.residuals.size(); ++k) {
        CHECK(res.log.residuals[k] <= res.log.residuals[k - 1] * (1 + 1e-12));
    }
    CHECK(res.log.residuals.back() < 0.2 * res.log.residuals.front());
}

TEST_CASE("landweber discrepancy principle") {
    const Setup S(41, 90, 35);
    const auto clean = apply_radon(S.P, disk_phantom(S.grid, {0.0, 0.0}, 0.5, 1.0));
    const auto noisy = add_noise(clean, 0.05, 3);
    StoppingRule stop;
    stop.tau = 1.5;
    stop.delta = noisy.delta;
    stop.k_max = 5000;
    const auto res = landweber(S.P, noisy.data, default_landweber_stepsize(S.P), stop);
    REQUIRE(res.log.reason == StopReason::Discrepancy);
    const std::size_t k = res.log.final_index;
    CHECK(res.log.residuals[k] <= stop.threshold());
    REQUIRE(k > 0);
    CHECK(res.log.residuals[k - 1] > stop.threshold());
}

TEST_CASE("soft-thresholded variants") {
    const Setup S(21, 30, 15);
    const auto g = apply_radon(S.P, disk_phantom(S.grid, {0.0, 0.0}, 0.5, 1.0));
    const double gamma = default_landweber_stepsize(S.P);

    const auto plain = landweber(S.P, g, gamma, kmax(20));
    const auto ista = landweber(S.P, g, gamma, kmax(20), LandweberVariant::Ista, 0.0);
    CHECK(ista.image.values == plain.image.values);

    DensityImage plain1(S.grid), fista1(S.grid);
    landweber(S.P, g, gamma, kmax(1), LandweberVariant::Plain, 0.0, [&](std::size_t k, const DensityImage& f) {
        if (k == 1) plain1 = f;
    });
    landweber(S.P, g, gamma, kmax(1), LandweberVariant::Fista, 0.0, [&](std::size_t k, const DensityImage& f) {
        if (k == 1) fista1 = f;
    });
    for (std::size_t p = 0; p < plain1.values.size(); ++p) CHECK(fista1.values[p] == doctest::Approx(plain1.values[p]));

    // FISTA is not slower than plain Landweber here
    const auto fista = landweber(S.P, g, gamma, kmax(20), LandweberVariant::Fista, 0.0);
    CHECK(fista.log.residuals.back() <= plain.log.residuals.back());

    const auto back = apply_back_projection(S.P, g);
    const double big = 2.0 * *std::max_element(back.values.begin(), back.values.end());
    for (auto v : {LandweberVariant::Ista, LandweberVariant::Fista}) {
        CHECK(norm2(landweber(S.P, g, gamma, kmax(10), v, big).image.values) == 0.0);
    }

    CHECK_THROWS(landweber(S.P, g, gamma, kmax(5), LandweberVariant::Plain, 0.1));
    CHECK_THROWS(landweber(S.P, g, gamma, kmax(5), LandweberVariant::Ista, -0.1));
    CHECK_THROWS(landweber(S.P, g, 0.0, kmax(5)));
    CHECK_THROWS(landweber(S.P, g, 2.01 * gamma, kmax(5)));
    StoppingRule bad;
    bad.tau = 1.0;
    CHECK_THROWS(landweber(S.P, g, gamma, bad));
}

TEST_CASE("tikhonov matches the dense normal equations") {
    const ImageGrid grid(4);
    const auto geo = ScanGeometry::uniform(6, 5);
    const auto P = build_projector(grid, geo);
    const Sinogram g(geo, oracle::uniform_values(geo.size(), 8, 0.0, 1.0));
    const double beta = 3.0;
    const std::size_t n = grid.pixel_count();
    std::vector<std::vector<double>> A(P.rows(), std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < P.rows(); ++r)
        for (std::size_t k = P.row_ptr()[r]; k < P.row_ptr()[r + 1]; ++k) A[r][P.col_idx()[k]] += P.values()[k];
    std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < P.rows(); ++r) b[i] += A[r][i] * g.values[r];
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t r = 0; r < P.rows(); ++r) M[i][j] += A[r][i] * A[r][j];
        M[i][i] += beta * grid.pixel_area();
    }
    const auto ref = dense_solve(M, b);
    const auto f = tikhonov(P, g, beta, 1e-13, 500);
    CHECK(oracle::rel_l2(f.values, ref) < 1e-9);
}

TEST_CASE("tikhonov properties") {
    const Setup S(21, 30, 15);
    const auto g = apply_radon(S.P, disk_phantom(S.grid, {0.0, 0.0}, 0.5, 1.0));
    double prev = std::numeric_limits<double>::infinity();
    for (double beta : {1.0, 10.0, 100.0, 1000.0}) {
        const double nf = norm2(tikhonov(S.P, g, beta, 1e-12).values);
        CHECK(nf <= prev);
        prev = nf;
    }
    Sinogram g2 = g;
    for (double& v : g2.values) v *= -2.5;
    const auto f1 = tikhonov(S.P, g, 50.0, 1e-12);
    const auto f2 = tikhonov(S.P, g2, 50.0, 1e-12);
    for (std::size_t p = 0; p < f1.values.size(); ++p) CHECK(f2.values[p] == doctest::Approx(-2.5 * f1.values[p]));
    CHECK_THROWS(tikhonov(S.P, g, 0.0));
    CHECK_THROWS(tikhonov(S.P, g, 1.0, 0.0));
}

TEST_CASE("contour highlights edges") {
    const Setup S(81, 180, 71);
    const auto flat = contour(S.P, Sinogram(S.geo, std::vector<double>(S.geo.size(), 2.0)));
    CHECK(norm2(flat.values) < 1e-9);

    const double rho = 0.5, h = S.grid.pixel_side();
    const auto edge = contour(S.P, analytic_disk_sinogram(S.geo, {0.0, 0.0}, rho, 1.0));
    CHECK(mean_abs_where(edge, rho - 2 * h, rho + 2 * h) >= 3.0 * mean_abs_where(edge, 0.0, rho - 6 * h));

    const auto narrow = ScanGeometry::uniform(4, 2);
    CHECK_THROWS(contour(build_projector(S.grid, narrow), Sinogram(narrow)));
}
