#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace thz {

/// Square pixel grid tiling [-extent, extent]^2.
///
/// Pixel (row, col) has its center at x = -extent + (col + 0.5) * h,
/// y = extent - (row + 0.5) * h, so row 0 is the top of the image. Values are
/// stored row-major.
class ImageGrid {
public:
    explicit ImageGrid(std::size_t n_pixels, double extent = 1.0);

    std::size_t size() const { return n_; }
    std::size_t pixel_count() const { return n_ * n_; }
    double extent() const { return extent_; }
    double pixel_side() const { return 2.0 * extent_ / static_cast<double>(n_); }
    double pixel_area() const { return pixel_side() * pixel_side(); }

    double center_x(std::size_t col) const;
    double center_y(std::size_t row) const;

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t n_;
    double extent_;
};

/// Piecewise-constant density on an ImageGrid (absorption per unit length).
struct DensityImage {
    explicit DensityImage(ImageGrid g);
    DensityImage(ImageGrid g, std::vector<double> v);

    double& at(std::size_t row, std::size_t col) { return values[row * grid.size() + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * grid.size() + col]; }

    ImageGrid grid;
    std::vector<double> values;
};

/// Parallel-beam sampling: angles theta_j in [0, 2pi) and detector offsets s_i.
class ScanGeometry {
public:
    ScanGeometry(std::vector<double> angles, std::vector<double> offsets);

    /// `n_angles` angles 2 pi j / n_angles and `n_offsets` cell-centered
    /// offsets covering [-extent, extent].
    static ScanGeometry uniform(std::size_t n_angles, std::size_t n_offsets, double extent = 1.0);

    const std::vector<double>& angles() const { return angles_; }
    const std::vector<double>& offsets() const { return offsets_; }
    std::size_t n_angles() const { return angles_.size(); }
    std::size_t n_offsets() const { return offsets_.size(); }
    std::size_t size() const { return angles_.size() * offsets_.size(); }

    double offset_spacing() const;
    /// Mean angular step; 2 pi for a single angle.
    double angle_spacing() const;
    /// Quadrature weight of one (offset, angle) cell.
    double cell_weight() const { return offset_spacing() * angle_spacing(); }

    bool offsets_uniform(double rel_tol = 1e-9) const;
    bool angles_uniform(double rel_tol = 1e-9) const;

    friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;

private:
    std::vector<double> angles_;
    std::vector<double> offsets_;
};

/// Values attached to a ScanGeometry; offset index is fastest:
/// value(i, j) = values[j * n_offsets + i].
struct Sinogram {
    explicit Sinogram(ScanGeometry g);
    Sinogram(ScanGeometry g, std::vector<double> v);

    double& at(std::size_t offset, std::size_t angle) {
        return values[angle * geometry.n_offsets() + offset];
    }
    double at(std::size_t offset, std::size_t angle) const {
        return values[angle * geometry.n_offsets() + offset];
    }

    ScanGeometry geometry;
    std::vector<double> values;
};

// Plain Euclidean helpers used across the solvers.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Inner products with the quadrature weights of each space.
double image_inner(const DensityImage& a, const DensityImage& b);
double sinogram_inner(const Sinogram& a, const Sinogram& b);

}  // namespace thz
