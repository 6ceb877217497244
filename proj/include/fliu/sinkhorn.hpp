#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fliu/error.hpp"

namespace fliu {

// Dense row-major K x L matrix of nonnegative reals; just enough matrix for
// the marginal-fitting pipeline.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    double row_sum(size_t r) const {
        return std::accumulate(data.begin() + r * cols, data.begin() + (r + 1) * cols, 0.0);
    }
    double col_sum(size_t c) const {
        double s = 0.0;
        for (size_t r = 0; r < rows; ++r) s += at(r, c);
        return s;
    }
};

// Result of a marginal fit: the scaled matrix, its targets, the tolerance
// that was requested and the deviation actually achieved.
struct DistributionMatrix {
    Matrix entries;
    std::vector<double> row_targets;
    std::vector<double> col_targets;
    double tolerance = 0.0;
    double achieved_deviation = 0.0;
    size_t iterations = 0;
};

inline constexpr double kSinkhornDefaultTol = 1e-8;
inline constexpr size_t kSinkhornDefaultMaxIter = 10000;

// Iterative proportional fitting: alternately rescales rows and columns of a
// strictly positive matrix until both marginals match their targets within
// tol. This is the Sinkhorn-Knopp iteration generalized to arbitrary
// positive marginal vectors; the result minimizes KL divergence to the input
// among matrices with those marginals.
inline DistributionMatrix ipf_fit(Matrix m, std::vector<double> row_targets,
                                  std::vector<double> col_targets,
                                  double tol = kSinkhornDefaultTol,
                                  size_t max_iter = kSinkhornDefaultMaxIter) {
    if (m.rows == 0 || m.cols == 0) throw InvalidArgumentError("ipf_fit: empty matrix");
    if (row_targets.size() != m.rows || col_targets.size() != m.cols) {
        throw DimensionError("ipf_fit: target lengths do not match matrix shape");
    }
    for (double v : m.data) {
        if (!(v > 0.0)) throw InvalidArgumentError("ipf_fit: matrix entries must be strictly positive");
    }
    for (double t : row_targets) {
        if (!(t > 0.0)) throw InvalidArgumentError("ipf_fit: row targets must be strictly positive");
    }
    for (double t : col_targets) {
        if (!(t > 0.0)) throw InvalidArgumentError("ipf_fit: column targets must be strictly positive");
    }
    const double total_rows = std::accumulate(row_targets.begin(), row_targets.end(), 0.0);
    const double total_cols = std::accumulate(col_targets.begin(), col_targets.end(), 0.0);
    if (std::abs(total_rows - total_cols) > 1e-9 * std::max(1.0, std::abs(total_rows))) {
        throw InvalidArgumentError("ipf_fit: inconsistent targets (row total " +
                                   std::to_string(total_rows) + " vs column total " +
                                   std::to_string(total_cols) + ")");
    }

    DistributionMatrix out;
    out.row_targets = std::move(row_targets);
    out.col_targets = std::move(col_targets);
    out.tolerance = tol;

    auto max_deviation = [&](const Matrix& x) {
        double dev = 0.0;
        for (size_t r = 0; r < x.rows; ++r) dev = std::max(dev, std::abs(x.row_sum(r) - out.row_targets[r]));
        for (size_t c = 0; c < x.cols; ++c) dev = std::max(dev, std::abs(x.col_sum(c) - out.col_targets[c]));
        return dev;
    };

    size_t it = 0;
    double dev = max_deviation(m);
    while (dev >= tol && it < max_iter) {
        for (size_t r = 0; r < m.rows; ++r) {
            const double scale = out.row_targets[r] / m.row_sum(r);
            for (size_t c = 0; c < m.cols; ++c) m.at(r, c) *= scale;
        }
        for (size_t c = 0; c < m.cols; ++c) {
            const double scale = out.col_targets[c] / m.col_sum(c);
            for (size_t r = 0; r < m.rows; ++r) m.at(r, c) *= scale;
        }
        ++it;
        dev = max_deviation(m);
    }

    out.entries = std::move(m);
    out.achieved_deviation = dev;
    out.iterations = it;
    if (dev >= tol) {
        throw ConvergenceError("sinkhorn: marginal deviation " + std::to_string(dev) +
                               " still >= tol " + std::to_string(tol) + " after " +
                               std::to_string(it) + " iterations");
    }
    return out;
}

// Sinkhorn-Knopp with uniform scalar targets: every row sum fitted to
// row_target, every column sum to col_target. Requires the total masses to
// agree: rows*row_target == cols*col_target.
inline DistributionMatrix sinkhorn_knopp(Matrix m, double row_target, double col_target,
                                         double tol = kSinkhornDefaultTol,
                                         size_t max_iter = kSinkhornDefaultMaxIter) {
    if (m.rows == 0 || m.cols == 0) throw InvalidArgumentError("sinkhorn_knopp: empty matrix");
    const size_t rows = m.rows;
    const size_t cols = m.cols;
    const double total_rows = static_cast<double>(rows) * row_target;
    const double total_cols = static_cast<double>(cols) * col_target;
    if (std::abs(total_rows - total_cols) > 1e-9 * std::max(1.0, std::abs(total_rows))) {
        throw InvalidArgumentError("sinkhorn_knopp: inconsistent targets, K*row_target != L*col_target");
    }
    return ipf_fit(std::move(m), std::vector<double>(rows, row_target),
                   std::vector<double>(cols, col_target), tol, max_iter);
}

// Largest-remainder apportionment: rounds `share` (nonnegative reals) to
// integers summing exactly to `total`, each entry within 1 of its ideal
// share. Ties in the fractional parts go to the lower index.
inline std::vector<int64_t> largest_remainder(const std::vector<double>& share, int64_t total) {
    const size_t n = share.size();
    if (n == 0) throw InvalidArgumentError("largest_remainder: empty share vector");
    double sum = std::accumulate(share.begin(), share.end(), 0.0);
    if (!(sum > 0.0)) throw InvalidArgumentError("largest_remainder: shares must have positive sum");

    std::vector<int64_t> counts(n);
    std::vector<std::pair<double, size_t>> remainders(n);
    int64_t assigned = 0;
    for (size_t i = 0; i < n; ++i) {
        const double ideal = share[i] / sum * static_cast<double>(total);
        counts[i] = static_cast<int64_t>(std::floor(ideal));
        remainders[i] = {ideal - std::floor(ideal), i};
        assigned += counts[i];
    }
    // Largest fractional part first; equal fractions resolved by lower index.
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    int64_t leftover = total - assigned;
    for (size_t i = 0; leftover > 0 && i < n; ++i, --leftover) {
        counts[remainders[i].second]++;
    }
    return counts;
}

// Converts a column-stochastic fitted matrix into integer per-client counts:
// column j of the result sums exactly to class_counts[j] and each entry is
// within 1 of fitted(k,j) * class_counts[j] (largest-remainder per column,
// ties to the lower client id).
inline std::vector<std::vector<int64_t>> allocate_counts(const DistributionMatrix& fitted,
                                                         const std::vector<int64_t>& class_counts) {
    const Matrix& m = fitted.entries;
    if (class_counts.size() != m.cols) {
        throw DimensionError("allocate_counts: class_counts length != matrix columns");
    }
    std::vector<std::vector<int64_t>> counts(m.rows, std::vector<int64_t>(m.cols, 0));
    std::vector<double> column(m.rows);
    for (size_t j = 0; j < m.cols; ++j) {
        if (class_counts[j] < 0) throw InvalidArgumentError("allocate_counts: negative class count");
        if (class_counts[j] == 0) continue;
        for (size_t k = 0; k < m.rows; ++k) column[k] = m.at(k, j);
        const auto col_counts = largest_remainder(column, class_counts[j]);
        for (size_t k = 0; k < m.rows; ++k) counts[k][j] = col_counts[k];
    }
    return counts;
}

} // namespace fliu
