#pragma once

#include <array>
#include <cstdint>

#include "thz/geometry.hpp"

namespace thz {

using Point2 = std::array<double, 2>;

/// Hollow equilateral triangle. With rotation 0 the apex points down and the
/// "top" edge is horizontal; the top wall may be thicker than the two sides.
struct TriangleSpec {
    double circumradius = 0.7;
    Point2 centroid{0.0, 0.0};
    double rotation = 0.0;
    double side_wall_thickness = 0.08;
    double top_wall_thickness = 0.16;
    double value = 1.0;

    void validate() const;
};

/// Pixel-center membership in the triangular annulus.
DensityImage triangle_phantom(const ImageGrid& grid, const TriangleSpec& spec);

/// Mask of pixels inside the outer triangle but not in the walls (the hollow).
DensityImage triangle_hollow_mask(const ImageGrid& grid, const TriangleSpec& spec);

DensityImage disk_phantom(const ImageGrid& grid, Point2 center, double radius, double value);

/// Exact line integrals 2 value sqrt(rho^2 - d^2), d = s - <center, u(theta)>.
Sinogram analytic_disk_sinogram(const ScanGeometry& geometry, Point2 center, double radius, double value);

enum class NoiseKind { Gaussian, Uniform };

struct NoisyData {
    Sinogram data;
    double delta = 0.0;  ///< realized Euclidean norm of the perturbation
};

/// Adds seeded zero-mean noise scaled to RMS = relative_level * RMS(s).
NoisyData add_noise(const Sinogram& s, double relative_level, std::uint64_t seed,
                    NoiseKind kind = NoiseKind::Gaussian);

/// In-place variant on a flat array; returns the realized perturbation norm.
double add_noise_inplace(std::span<double> values, double relative_level, std::uint64_t seed,
                         NoiseKind kind = NoiseKind::Gaussian);

}  // namespace thz
