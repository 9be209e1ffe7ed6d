#include "thz/phantoms.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace thz {

namespace {

struct TriangleFrame {
    std::array<Point2, 3> inward;   // unit inward normals; edge e is opposite vertex e
    std::array<double, 3> offset;   // edge e: <inward_e, x - c> >= offset_e
    std::array<double, 3> wall;
};

TriangleFrame frame_of(const TriangleSpec& spec) {
    TriangleFrame fr{};
    // vertex 2 (the apex at 270 degrees) faces the top edge
    const std::array<double, 3> vertex_angles{std::numbers::pi / 6.0, 5.0 * std::numbers::pi / 6.0,
                                              1.5 * std::numbers::pi};
    for (int e = 0; e < 3; ++e) {
        const double phi = vertex_angles[e] + spec.rotation;
        fr.inward[e] = {std::cos(phi), std::sin(phi)};
        fr.offset[e] = -0.5 * spec.circumradius;
        fr.wall[e] = e == 2 ? spec.top_wall_thickness : spec.side_wall_thickness;
    }
    return fr;
}

enum class Region { Outside, Wall, Hollow };

Region classify(const TriangleFrame& fr, const TriangleSpec& spec, double x, double y) {
    bool inside_outer = true;
    bool inside_inner = true;
    for (int e = 0; e < 3; ++e) {
        const double d = fr.inward[e][0] * (x - spec.centroid[0]) + fr.inward[e][1] * (y - spec.centroid[1]);
        if (d < fr.offset[e]) inside_outer = false;
        if (d < fr.offset[e] + fr.wall[e]) inside_inner = false;
    }
    if (!inside_outer) return Region::Outside;
    return inside_inner ? Region::Hollow : Region::Wall;
}

void check_fits(const ImageGrid& grid, const TriangleSpec& spec) {
    const auto fr = frame_of(spec);
    for (int e = 0; e < 3; ++e) {
        const double vx = spec.centroid[0] + spec.circumradius * fr.inward[e][0];
        const double vy = spec.centroid[1] + spec.circumradius * fr.inward[e][1];
        if (std::hypot(vx, vy) > grid.extent() * (1.0 + 1e-12)) {
            throw std::invalid_argument("triangle_phantom: triangle exceeds the grid's inscribed disk");
        }
    }
}

DensityImage rasterize(const ImageGrid& grid, const TriangleSpec& spec, Region wanted, double value) {
    spec.validate();
    check_fits(grid, spec);
    const auto fr = frame_of(spec);
    DensityImage out(grid);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        for (std::size_t c = 0; c < grid.size(); ++c) {
            if (classify(fr, spec, grid.center_x(c), grid.center_y(r)) == wanted) out.at(r, c) = value;
        }
    }
    return out;
}

}  // namespace

void TriangleSpec::validate() const {
    if (!(circumradius > 0.0)) throw std::invalid_argument("TriangleSpec: circumradius must be positive");
    const double limit = 0.5 * circumradius;
    if (!(side_wall_thickness > 0.0 && side_wall_thickness < limit) ||
        !(top_wall_thickness > 0.0 && top_wall_thickness < limit)) {
        throw std::invalid_argument("TriangleSpec: wall thicknesses must lie in (0, circumradius / 2)");
    }
    if (top_wall_thickness < side_wall_thickness) {
        throw std::invalid_argument("TriangleSpec: top wall must be at least as thick as the sides");
    }
    if (!std::isfinite(value)) throw std::invalid_argument("TriangleSpec: value must be finite");
}

DensityImage triangle_phantom(const ImageGrid& grid, const TriangleSpec& spec) {
    return rasterize(grid, spec, Region::Wall, spec.value);
}

DensityImage triangle_hollow_mask(const ImageGrid& grid, const TriangleSpec& spec) {
    return rasterize(grid, spec, Region::Hollow, 1.0);
}

DensityImage disk_phantom(const ImageGrid& grid, Point2 center, double radius, double value) {
    if (!(radius >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("disk_phantom: invalid radius or value");
    const double E = grid.extent() * (1.0 + 1e-12);
    if (std::abs(center[0]) + radius > E || std::abs(center[1]) + radius > E) {
        throw std::invalid_argument("disk_phantom: disk exceeds the grid");
    }
    DensityImage out(grid);
    if (radius == 0.0) return out;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        for (std::size_t c = 0; c < grid.size(); ++c) {
            const double dx = grid.center_x(c) - center[0];
            const double dy = grid.center_y(r) - center[1];
            if (dx * dx + dy * dy <= radius * radius) out.at(r, c) = value;
        }
    }
    return out;
}

Sinogram analytic_disk_sinogram(const ScanGeometry& geometry, Point2 center, double radius, double value) {
    Sinogram out(geometry);
    for (std::size_t j = 0; j < geometry.n_angles(); ++j) {
        const double th = geometry.angles()[j];
        const double proj = center[0] * std::cos(th) + center[1] * std::sin(th);
        for (std::size_t i = 0; i < geometry.n_offsets(); ++i) {
            const double d = geometry.offsets()[i] - proj;
            out.at(i, j) = std::abs(d) < radius ? 2.0 * value * std::sqrt(radius * radius - d * d) : 0.0;
        }
    }
    return out;
}

double add_noise_inplace(std::span<double> values, double relative_level, std::uint64_t seed, NoiseKind kind) {
    if (!(relative_level >= 0.0)) throw std::invalid_argument("add_noise: relative level must be >= 0");
    if (relative_level == 0.0 || values.empty()) return 0.0;
    const double rms = norm2(values) / std::sqrt(static_cast<double>(values.size()));
    if (rms == 0.0) return 0.0;

    std::mt19937_64 rng(seed);
    std::vector<double> noise(values.size());
    if (kind == NoiseKind::Gaussian) {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& v : noise) v = dist(rng);
    } else {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : noise) v = dist(rng);
    }
    const double noise_rms = norm2(noise) / std::sqrt(static_cast<double>(noise.size()));
    const double scale = relative_level * rms / noise_rms;
    double sq = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double before = values[k];
        values[k] = before + scale * noise[k];
        const double diff = values[k] - before;
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

NoisyData add_noise(const Sinogram& s, double relative_level, std::uint64_t seed, NoiseKind kind) {
    NoisyData out{s, 0.0};
    out.delta = add_noise_inplace(out.data.values, relative_level, seed, kind);
    return out;
}

}  // namespace thz
