#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "support/oracles.hpp"
#include "thz/phantoms.hpp"
#include "thz/radon.hpp"

using namespace thz;

namespace {

// point-in-triangle by edge cross products
bool in_triangle(const std::array<Point2, 3>& v, double x, double y) {
    auto side = [&](const Point2& a, const Point2& b) { return (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]); };
    const double d0 = side(v[0], v[1]), d1 = side(v[1], v[2]), d2 = side(v[2], v[0]);
    return (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0);
}

std::array<Point2, 3> vertices(double R, double rot) {
    std::array<Point2, 3> v{};
    const double a[3] = {std::numbers::pi / 6, 5 * std::numbers::pi / 6, 1.5 * std::numbers::pi};
    for (int k = 0; k < 3; ++k) v[k] = {R * std::cos(a[k] + rot), R * std::sin(a[k] + rot)};
    return v;
}

std::size_t nonzero(const DensityImage& f) {
    return static_cast<std::size_t>(std::count_if(f.values.begin(), f.values.end(), [](double v) { return v != 0.0; }));
}

}  // namespace

TEST_CASE("triangle parameter validation") {
    TriangleSpec s;
    CHECK_NOTHROW(s.validate());
    s.top_wall_thickness = 0.05;
    CHECK_THROWS(s.validate());
    s = TriangleSpec{};
    s.side_wall_thickness = 0.35;
    s.top_wall_thickness = 0.35;
    CHECK_THROWS(s.validate());
    s = TriangleSpec{};
    s.circumradius = 1.2;
    CHECK_THROWS(triangle_phantom(ImageGrid(41), s));
}

TEST_CASE("default triangle is two-valued and nonempty") {
    const auto f = triangle_phantom(ImageGrid(81), TriangleSpec{});
    std::set<double> levels(f.values.begin(), f.values.end());
    CHECK(levels == std::set<double>{0.0, 1.0});
    CHECK(nonzero(f) > 0);
}

TEST_CASE("walls, hollow and outside partition the outer triangle") {
    const ImageGrid grid(81);
    for (double rot : {0.0, 0.4}) {
        TriangleSpec s;
        s.rotation = rot;
        const auto wall = triangle_phantom(grid, s);
        const auto hollow = triangle_hollow_mask(grid, s);
        const auto v = vertices(s.circumradius, rot);
        std::size_t outer = 0;
        for (std::size_t r = 0; r < 81; ++r)
            for (std::size_t c = 0; c < 81; ++c) outer += in_triangle(v, grid.center_x(c), grid.center_y(r));
        CHECK(nonzero(wall) + nonzero(hollow) == outer);
        for (std::size_t p = 0; p < wall.values.size(); ++p) CHECK_FALSE((wall.values[p] != 0 && hollow.values[p] != 0));
    }
}

// even grid: no pixel center at the centroid, where the vanishing hollow sits
TEST_CASE("walls at the thickness limit give a solid triangle") {
    const ImageGrid grid(80);
    TriangleSpec s;
    s.side_wall_thickness = 0.4999 * s.circumradius;
    s.top_wall_thickness = 0.4999 * s.circumradius;
    CHECK(nonzero(triangle_hollow_mask(grid, s)) == 0);
    const auto v = vertices(s.circumradius, 0.0);
    std::size_t outer = 0;
    for (std::size_t r = 0; r < 80; ++r)
        for (std::size_t c = 0; c < 80; ++c) outer += in_triangle(v, grid.center_x(c), grid.center_y(r));
    CHECK(nonzero(triangle_phantom(grid, s)) == outer);
}

// The vertical ray x = 0 crosses the top wall and then the apex where the two
// side walls meet; at 60 degrees to the ray each side contributes 2 t_side.
TEST_CASE("vertical ray through the top wall") {
    const ImageGrid grid(161);
    TriangleSpec s;
    s.value = 1.3;
    const auto P = build_projector(grid, ScanGeometry({0.0}, {0.0, 0.5}));
    const double v = apply_radon(P, triangle_phantom(grid, s)).values[0];
    const double expected = s.value * (s.top_wall_thickness + 2 * s.side_wall_thickness);
    CHECK(std::abs(v - expected) <= 2 * grid.pixel_side() * s.value);
}

TEST_CASE("disk phantom") {
    const ImageGrid grid(81);
    CHECK(nonzero(disk_phantom(grid, {0.0, 0.0}, 0.0, 1.0)) == 0);
    const auto unit = disk_phantom(grid, {0.0, 0.0}, 1.0, 2.0);
    for (std::size_t r = 0; r < 81; ++r)
        for (std::size_t c = 0; c < 81; ++c) {
            const bool inside = std::hypot(grid.center_x(c), grid.center_y(r)) <= 1.0;
            CHECK(unit.at(r, c) == (inside ? 2.0 : 0.0));
        }
    for (double rho : {0.2, 0.5, 0.8}) {
        const double area = static_cast<double>(nonzero(disk_phantom(grid, {0.1, -0.05}, rho, 1.0))) * grid.pixel_area();
        CHECK(std::abs(area - std::numbers::pi * rho * rho) <= 4 * rho * grid.pixel_side());
    }
    CHECK_THROWS(disk_phantom(grid, {0.6, 0.0}, 0.5, 1.0));
    CHECK_THROWS(disk_phantom(grid, {0.0, 0.0}, -0.1, 1.0));
}

TEST_CASE("analytic disk sinogram") {
    const auto geo = ScanGeometry::uniform(36, 41);
    const auto s = analytic_disk_sinogram(geo, {0.0, 0.0}, 0.5, 1.5);
    for (std::size_t j = 0; j < 36; ++j) {
        CHECK(s.at(20, j) == doctest::Approx(1.5));
        for (std::size_t i = 0; i < 41; ++i)
            if (std::abs(geo.offsets()[i]) >= 0.5) CHECK(s.at(i, j) == 0.0);
    }
    const auto off = analytic_disk_sinogram(ScanGeometry({0.0}, {0.0, 0.3}), {0.3, 0.0}, 0.4, 1.0);
    CHECK(off.values[1] == doctest::Approx(0.8));

    const ImageGrid grid(81);
    const auto P = build_projector(grid, geo);
    const auto Rf = apply_radon(P, disk_phantom(grid, {0.2, -0.1}, 0.4, 1.5));
    const auto ex = analytic_disk_sinogram(geo, {0.2, -0.1}, 0.4, 1.5);
    const double h = grid.pixel_side();
    for (std::size_t j = 0; j < geo.n_angles(); ++j) {
        const double th = geo.angles()[j];
        for (std::size_t i = 0; i < geo.n_offsets(); ++i) {
            const double d = geo.offsets()[i] - (0.2 * std::cos(th) - 0.1 * std::sin(th));
            if (std::abs(d) <= 0.4 - 2 * h) CHECK(std::abs(Rf.at(i, j) - ex.at(i, j)) <= 2 * h * 1.5);
        }
    }
}

TEST_CASE("seeded noise") {
    const auto geo = ScanGeometry::uniform(90, 35);
    const Sinogram s(geo, oracle::uniform_values(geo.size(), 9, 0.0, 2.0));
    const auto none = add_noise(s, 0.0, 1);
    CHECK(none.data.values == s.values);
    CHECK(none.delta == 0.0);
    for (NoiseKind kind : {NoiseKind::Gaussian, NoiseKind::Uniform}) {
        const auto a = add_noise(s, 0.05, 42, kind);
        const auto b = add_noise(s, 0.05, 42, kind);
        CHECK(a.data.values == b.data.values);
        CHECK(add_noise(s, 0.05, 43, kind).data.values != a.data.values);
        double diff = 0.0;
        for (std::size_t r = 0; r < s.values.size(); ++r) diff += std::pow(a.data.values[r] - s.values[r], 2);
        CHECK(a.delta == doctest::Approx(std::sqrt(diff)).epsilon(1e-14));
        CHECK(std::abs(a.delta / norm2(s.values) - 0.05) <= 0.01);
    }
    CHECK_THROWS(add_noise(s, -0.1, 1));
}
