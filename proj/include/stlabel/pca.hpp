#ifndef STLABEL_PCA_HPP
#define STLABEL_PCA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

/**
 * @file pca.hpp
 *
 * Principal-component embedding of the normalized expression matrix.
 */

namespace stlabel {

/**
 * Cells-by-dims coordinates in principal component space, with the
 * per-component explained variance of the decomposition.
 */
struct Embedding {
    int64_t n_cells = 0;
    int64_t dims = 0;
    Eigen::MatrixXd coordinates;            // n_cells x dims
    Eigen::MatrixXd components;             // kept_genes x dims, orthonormal columns
    std::vector<int64_t> kept_genes;        // columns that survived the zero-variance drop
    std::vector<double> explained_variance; // one per component, non-increasing
    double total_variance = 0.0;
    Eigen::VectorXd column_means;           // over kept genes, for reconstruction
};

/**
 * Exact PCA via eigendecomposition of the sample covariance of the
 * mean-centered matrix. Zero-variance columns are dropped first.
 *
 * Determinism: components are ordered by non-increasing explained variance
 * and each component is oriented so its largest-magnitude loading is
 * positive. The seed parameter is accepted for interface stability but the
 * exact solver does not consume randomness.
 */
inline Embedding pca(const Eigen::MatrixXd& normalized, int64_t n_components, uint64_t seed = 0) {
    (void)seed;
    const int64_t n_cells = normalized.rows();
    const int64_t n_genes = normalized.cols();
    if (n_components < 1) {
        throw ValidationError("pca: n_components must be at least 1");
    }
    if (n_components > std::min(n_cells, n_genes)) {
        throw ValidationError("pca: n_components (" + std::to_string(n_components)
                              + ") exceeds min(n_cells, n_genes) = "
                              + std::to_string(std::min(n_cells, n_genes)));
    }

    std::vector<int64_t> kept;
    kept.reserve(n_genes);
    for (int64_t g = 0; g < n_genes; ++g) {
        if (normalized.col(g).maxCoeff() != normalized.col(g).minCoeff()) {
            kept.push_back(g);
        }
    }
    if (kept.empty()) {
        throw ValidationError("pca: every gene has zero variance");
    }

    Eigen::MatrixXd X(n_cells, static_cast<int64_t>(kept.size()));
    for (size_t i = 0; i < kept.size(); ++i) {
        X.col(static_cast<int64_t>(i)) = normalized.col(kept[i]);
    }
    Eigen::VectorXd means = X.colwise().mean();
    X.rowwise() -= means.transpose();

    const double denom = n_cells > 1 ? static_cast<double>(n_cells - 1) : 1.0;
    Eigen::MatrixXd cov = (X.transpose() * X) / denom;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw ValidationError("pca: eigendecomposition failed");
    }

    const int64_t available = static_cast<int64_t>(kept.size());
    const int64_t dims = std::min(n_components, available);

    Embedding emb;
    emb.n_cells = n_cells;
    emb.dims = dims;
    emb.kept_genes = kept;
    emb.column_means = means;
    emb.components.resize(available, dims);
    emb.explained_variance.resize(dims);
    emb.total_variance = std::max(0.0, solver.eigenvalues().sum());

    // Eigen returns ascending eigenvalues; take the top `dims` in
    // descending order and fix each component's sign.
    for (int64_t c = 0; c < dims; ++c) {
        int64_t src = available - 1 - c;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        int64_t peak = 0;
        for (int64_t i = 1; i < v.size(); ++i) {
            if (std::abs(v[i]) > std::abs(v[peak])) {
                peak = i;
            }
        }
        if (v[peak] < 0.0) {
            v = -v;
        }
        emb.components.col(c) = v;
        emb.explained_variance[static_cast<size_t>(c)] = std::max(0.0, solver.eigenvalues()[src]);
    }
    emb.coordinates = X * emb.components;

    for (const auto& v : emb.explained_variance) {
        if (!std::isfinite(v)) {
            throw ValidationError("pca: non-finite explained variance");
        }
    }
    if (!emb.coordinates.allFinite()) {
        throw ValidationError("pca: non-finite coordinates");
    }
    return emb;
}

}

#endif
