#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thz/geometry.hpp"

namespace thz {

/// Sparse discrete Radon operator built from exact ray/pixel intersection
/// lengths (line model).
///
/// Row r = j * n_offsets + i holds the chord lengths of the line
/// s_i u(theta_j) + sigma u(theta_j)^perp through every pixel it crosses.
/// Entries are stored twice: CSR for projection and CSC for back-projection,
/// so both products are row-parallel and their summation order never depends
/// on the thread count. Immutable after assembly.
class ProjectionMatrix {
public:
    ProjectionMatrix(ImageGrid grid, ScanGeometry geometry, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values);

    const ImageGrid& grid() const { return grid_; }
    const ScanGeometry& geometry() const { return geometry_; }

    std::size_t rows() const { return geometry_.size(); }
    std::size_t cols() const { return grid_.pixel_count(); }
    std::size_t nonzeros() const { return values_.size(); }

    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// out = A x (raw chord-length sums, no quadrature weights).
    void multiply(std::span<const double> x, std::span<double> out) const;
    /// out = A^T y (plain transpose).
    void multiply_transpose(std::span<const double> y, std::span<double> out) const;

    /// Factor turning A^T into the adjoint w.r.t. the weighted inner products:
    /// cell_weight / pixel_area.
    double adjoint_scale() const { return geometry_.cell_weight() / grid_.pixel_area(); }

private:
    ImageGrid grid_;
    ScanGeometry geometry_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
    // transposed copy
    std::vector<std::size_t> t_col_ptr_;
    std::vector<std::size_t> t_row_idx_;
    std::vector<double> t_values_;
};

ProjectionMatrix build_projector(const ImageGrid& grid, const ScanGeometry& geometry);

Sinogram apply_radon(const ProjectionMatrix& P, const DensityImage& f);

/// Weighted adjoint R* g = (cell_weight / pixel_area) A^T g, so that
/// sinogram_inner(Rf, g) == image_inner(f, R* g).
DensityImage apply_back_projection(const ProjectionMatrix& P, const Sinogram& g);

struct NormEstimate {
    double value = 0.0;       ///< largest singular value of the weighted operator
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> history;  ///< estimate after each iteration
};

/// Power iteration on R*R started from the constant image.
NormEstimate operator_norm_estimate(const ProjectionMatrix& P, std::size_t max_iters = 100,
                                    double tol = 1e-6);

}  // namespace thz
