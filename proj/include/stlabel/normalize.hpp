#ifndef STLABEL_NORMALIZE_HPP
#define STLABEL_NORMALIZE_HPP

#include <cmath>

#include <Eigen/Dense>

#include "errors.hpp"
#include "expression.hpp"
#include "parallel.hpp"

namespace stlabel {

/**
 * Total-count normalization to `target_sum` per cell followed by log1p.
 *
 * Zero-total cells stay all-zero. The transform is monotone per cell, so
 * within-cell rank order of gene values is preserved.
 */
inline Eigen::MatrixXd normalize_log(const ExpressionMatrix& matrix, double target_sum,
                                     int threads = 1) {
    if (!(target_sum > 0.0)) {
        throw ValidationError("normalize_log: target_sum must be positive");
    }
    auto totals = matrix.cell_totals();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(matrix.n_cells, matrix.n_genes);
    for (const auto& t : matrix.entries) {
        out(t.cell, t.gene) = static_cast<double>(t.count);
    }
    parallel_for(static_cast<size_t>(matrix.n_cells), threads, [&](size_t begin, size_t end) {
        for (size_t cell = begin; cell < end; ++cell) {
            double total = static_cast<double>(totals[cell]);
            if (total <= 0.0) {
                continue;  // zero-total cell, row stays all-zero
            }
            double scale = target_sum / total;
            for (int64_t g = 0; g < matrix.n_genes; ++g) {
                out(static_cast<int64_t>(cell), g) = std::log1p(out(static_cast<int64_t>(cell), g) * scale);
            }
        }
    });
    return out;
}

}

#endif
