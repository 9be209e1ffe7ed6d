#include "thz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace thz {

namespace {

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) + ": non-finite value");
        }
    }
}

bool spacing_uniform(const std::vector<double>& v, double rel_tol) {
    if (v.size() < 3) return true;
    const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (std::abs((v[k] - v[k - 1]) - step) > rel_tol * std::abs(step)) return false;
    }
    return true;
}

}  // namespace

ImageGrid::ImageGrid(std::size_t n_pixels, double extent) : n_(n_pixels), extent_(extent) {
    if (n_pixels < 1) throw std::invalid_argument("ImageGrid: need at least one pixel");
    if (!(extent > 0.0) || !std::isfinite(extent)) {
        throw std::invalid_argument("ImageGrid: extent must be positive");
    }
}

double ImageGrid::center_x(std::size_t col) const {
    return -extent_ + (static_cast<double>(col) + 0.5) * pixel_side();
}

double ImageGrid::center_y(std::size_t row) const {
    return extent_ - (static_cast<double>(row) + 0.5) * pixel_side();
}

DensityImage::DensityImage(ImageGrid g) : grid(g), values(g.pixel_count(), 0.0) {}

DensityImage::DensityImage(ImageGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.pixel_count()) {
        throw std::invalid_argument("DensityImage: value count does not match grid");
    }
    require_finite(values, "DensityImage");
}

ScanGeometry::ScanGeometry(std::vector<double> angles, std::vector<double> offsets)
    : angles_(std::move(angles)), offsets_(std::move(offsets)) {
    if (angles_.empty()) throw std::invalid_argument("ScanGeometry: need at least one angle");
    if (offsets_.size() < 2) throw std::invalid_argument("ScanGeometry: need at least two offsets");
    require_finite(angles_, "ScanGeometry angles");
    require_finite(offsets_, "ScanGeometry offsets");
    for (std::size_t j = 0; j < angles_.size(); ++j) {
        if (angles_[j] < 0.0 || angles_[j] >= 2.0 * std::numbers::pi) {
            throw std::invalid_argument("ScanGeometry: angles must lie in [0, 2pi)");
        }
        if (j > 0 && !(angles_[j] > angles_[j - 1])) {
            throw std::invalid_argument("ScanGeometry: angles must be strictly increasing");
        }
    }
    for (std::size_t i = 1; i < offsets_.size(); ++i) {
        if (!(offsets_[i] > offsets_[i - 1])) {
            throw std::invalid_argument("ScanGeometry: offsets must be strictly increasing");
        }
    }
}

ScanGeometry ScanGeometry::uniform(std::size_t n_angles, std::size_t n_offsets, double extent) {
    if (n_angles < 1 || n_offsets < 2 || !(extent > 0.0)) {
        throw std::invalid_argument("ScanGeometry::uniform: invalid sizes");
    }
    std::vector<double> angles(n_angles);
    for (std::size_t j = 0; j < n_angles; ++j) {
        angles[j] = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_angles);
    }
    const double ds = 2.0 * extent / static_cast<double>(n_offsets);
    std::vector<double> offsets(n_offsets);
    for (std::size_t i = 0; i < n_offsets; ++i) {
        offsets[i] = -extent + (static_cast<double>(i) + 0.5) * ds;
    }
    // keep the central ray exactly at zero for odd counts
    if (n_offsets % 2 == 1) offsets[n_offsets / 2] = 0.0;
    return ScanGeometry(std::move(angles), std::move(offsets));
}

double ScanGeometry::offset_spacing() const {
    return (offsets_.back() - offsets_.front()) / static_cast<double>(offsets_.size() - 1);
}

double ScanGeometry::angle_spacing() const {
    if (angles_.size() == 1) return 2.0 * std::numbers::pi;
    return (angles_.back() - angles_.front()) / static_cast<double>(angles_.size() - 1);
}

bool ScanGeometry::offsets_uniform(double rel_tol) const { return spacing_uniform(offsets_, rel_tol); }
bool ScanGeometry::angles_uniform(double rel_tol) const { return spacing_uniform(angles_, rel_tol); }

Sinogram::Sinogram(ScanGeometry g) : geometry(std::move(g)), values(geometry.size(), 0.0) {}

Sinogram::Sinogram(ScanGeometry g, std::vector<double> v) : geometry(std::move(g)), values(std::move(v)) {
    if (values.size() != geometry.size()) {
        throw std::invalid_argument("Sinogram: value count does not match geometry");
    }
    require_finite(values, "Sinogram");
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double image_inner(const DensityImage& a, const DensityImage& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("image_inner: grid mismatch");
    return a.grid.pixel_area() * dot(a.values, b.values);
}

double sinogram_inner(const Sinogram& a, const Sinogram& b) {
    if (a.values.size() != b.values.size()) throw std::invalid_argument("sinogram_inner: size mismatch");
    return a.geometry.cell_weight() * dot(a.values, b.values);
}

}  // namespace thz
