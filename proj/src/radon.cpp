#include "thz/radon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "thz/parallel.hpp"

namespace thz {

namespace {

struct RowEntries {
    std::vector<std::size_t> cols;
    std::vector<double> lengths;
};

// Traces one line through the grid and returns (pixel, length) pairs sorted
// by pixel index.
RowEntries trace_ray(const ImageGrid& grid, double s, double theta) {
    const double E = grid.extent();
    const double h = grid.pixel_side();
    const auto n = grid.size();
    const double ux = std::cos(theta);
    const double uy = std::sin(theta);
    const double px = s * ux;
    const double py = s * uy;
    const double dx = -uy;
    const double dy = ux;

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto clip = [&](double p, double d) {
        if (d == 0.0) {
            if (std::abs(p) > E) {
                lo = 1.0;
                hi = 0.0;
            }
            return;
        }
        double a = (-E - p) / d;
        double b = (E - p) / d;
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
    };
    clip(px, dx);
    clip(py, dy);

    RowEntries out;
    if (!(hi > lo)) return out;

    std::vector<double> knots;
    knots.reserve(2 * (n + 1) + 2);
    knots.push_back(lo);
    knots.push_back(hi);
    auto crossings = [&](double p, double d) {
        if (d == 0.0) return;
        for (std::size_t k = 0; k <= n; ++k) {
            const double line = -E + static_cast<double>(k) * h;
            const double sigma = (line - p) / d;
            if (sigma > lo && sigma < hi) knots.push_back(sigma);
        }
    };
    crossings(px, dx);
    crossings(py, dy);
    std::sort(knots.begin(), knots.end());

    // Segments lying on a pixel boundary go to the pixel on the +u side.
    const double nudge = 1e-10 * h;
    const double min_len = 1e-13 * h;
    std::vector<std::pair<std::size_t, double>> hits;
    hits.reserve(knots.size());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double len = knots[k + 1] - knots[k];
        if (len <= min_len) continue;
        const double mid = 0.5 * (knots[k] + knots[k + 1]);
        const double x = px + mid * dx + nudge * ux;
        const double y = py + mid * dy + nudge * uy;
        const double cf = std::floor((x + E) / h);
        const double rf = std::floor((E - y) / h);
        if (cf < 0.0 || rf < 0.0 || cf >= static_cast<double>(n) || rf >= static_cast<double>(n)) continue;
        const auto col = static_cast<std::size_t>(cf);
        const auto row = static_cast<std::size_t>(rf);
        hits.emplace_back(row * n + col, len);
    }
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [pix, len] : hits) {
        if (!out.cols.empty() && out.cols.back() == pix) {
            out.lengths.back() += len;
        } else {
            out.cols.push_back(pix);
            out.lengths.push_back(len);
        }
    }
    return out;
}

}  // namespace

ProjectionMatrix::ProjectionMatrix(ImageGrid grid, ScanGeometry geometry, std::vector<std::size_t> row_ptr,
                                   std::vector<std::size_t> col_idx, std::vector<double> values)
    : grid_(grid),
      geometry_(std::move(geometry)),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
    if (row_ptr_.size() != rows() + 1 || row_ptr_.back() != values_.size() || col_idx_.size() != values_.size()) {
        throw std::invalid_argument("ProjectionMatrix: inconsistent sparse structure");
    }
    const std::size_t nc = cols();
    t_col_ptr_.assign(nc + 1, 0);
    for (std::size_t c : col_idx_) {
        if (c >= nc) throw std::invalid_argument("ProjectionMatrix: column index out of range");
        ++t_col_ptr_[c + 1];
    }
    for (std::size_t c = 0; c < nc; ++c) t_col_ptr_[c + 1] += t_col_ptr_[c];
    t_row_idx_.resize(values_.size());
    t_values_.resize(values_.size());
    std::vector<std::size_t> fill(t_col_ptr_.begin(), t_col_ptr_.end() - 1);
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const std::size_t dst = fill[col_idx_[k]]++;
            t_row_idx_[dst] = r;
            t_values_[dst] = values_[k];
        }
    }
}

void ProjectionMatrix::multiply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != cols() || out.size() != rows()) {
        throw std::invalid_argument("ProjectionMatrix::multiply: dimension mismatch");
    }
    parallel_for(0, rows(), [&](std::size_t r) {
        double acc = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += values_[k] * x[col_idx_[k]];
        out[r] = acc;
    });
}

void ProjectionMatrix::multiply_transpose(std::span<const double> y, std::span<double> out) const {
    if (y.size() != rows() || out.size() != cols()) {
        throw std::invalid_argument("ProjectionMatrix::multiply_transpose: dimension mismatch");
    }
    parallel_for(0, cols(), [&](std::size_t c) {
        double acc = 0.0;
        for (std::size_t k = t_col_ptr_[c]; k < t_col_ptr_[c + 1]; ++k) acc += t_values_[k] * y[t_row_idx_[k]];
        out[c] = acc;
    });
}

ProjectionMatrix build_projector(const ImageGrid& grid, const ScanGeometry& geometry) {
    const std::size_t n_off = geometry.n_offsets();
    const std::size_t n_rows = geometry.size();
    std::vector<RowEntries> rows(n_rows);
    parallel_for(0, n_rows, [&](std::size_t r) {
        const std::size_t i = r % n_off;
        const std::size_t j = r / n_off;
        rows[r] = trace_ray(grid, geometry.offsets()[i], geometry.angles()[j]);
    });

    std::vector<std::size_t> row_ptr(n_rows + 1, 0);
    for (std::size_t r = 0; r < n_rows; ++r) row_ptr[r + 1] = row_ptr[r] + rows[r].cols.size();
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    col_idx.reserve(row_ptr.back());
    values.reserve(row_ptr.back());
    for (auto& row : rows) {
        col_idx.insert(col_idx.end(), row.cols.begin(), row.cols.end());
        values.insert(values.end(), row.lengths.begin(), row.lengths.end());
        row = RowEntries{};
    }
    return ProjectionMatrix(grid, geometry, std::move(row_ptr), std::move(col_idx), std::move(values));
}

Sinogram apply_radon(const ProjectionMatrix& P, const DensityImage& f) {
    if (!(f.grid == P.grid())) throw std::invalid_argument("apply_radon: image grid does not match projector");
    Sinogram out(P.geometry());
    P.multiply(f.values, out.values);
    return out;
}

DensityImage apply_back_projection(const ProjectionMatrix& P, const Sinogram& g) {
    if (g.values.size() != P.rows()) {
        throw std::invalid_argument("apply_back_projection: sinogram size does not match projector");
    }
    DensityImage out(P.grid());
    P.multiply_transpose(g.values, out.values);
    const double scale = P.adjoint_scale();
    for (double& v : out.values) v *= scale;
    return out;
}

NormEstimate operator_norm_estimate(const ProjectionMatrix& P, std::size_t max_iters, double tol) {
    if (max_iters < 1) throw std::invalid_argument("operator_norm_estimate: max_iters must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("operator_norm_estimate: tol must be positive");

    NormEstimate est;
    std::vector<double> x(P.cols(), 1.0);
    std::vector<double> y(P.rows());
    std::vector<double> z(P.cols());
    const double scale = P.adjoint_scale();
    double nx = norm2(x);
    for (double& v : x) v /= nx;

    // With x normalized, ||A^T A x|| is non-decreasing along the iteration for
    // the PSD matrix A^T A, and sqrt of it times sqrt(scale) is the estimate.
    double previous = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        P.multiply(x, y);
        P.multiply_transpose(y, z);
        const double nz = norm2(z);
        const double sigma = std::sqrt(nz * scale);
        est.history.push_back(sigma);
        est.value = sigma;
        est.iterations = it + 1;
        if (nz == 0.0) {
            est.converged = true;
            break;
        }
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = z[k] / nz;
        if (it > 0 && std::abs(sigma - previous) <= tol * sigma) {
            est.converged = true;
            break;
        }
        previous = sigma;
    }
    return est;
}

}  // namespace thz
