#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ppgroup/intensity.hpp"

namespace ppgroup {

/// Pairwise similarity of intensity surfaces, entries in (0, 1] with unit
/// diagonal: H_ij = exp(-||p_i - p_j||_2) over unit-sum flattened surfaces.
struct SimilarityMatrix {
    Eigen::MatrixXd H;

    int size() const { return static_cast<int>(H.rows()); }
};

/// Elementwise Fisher z-transform of a similarity matrix; finite everywhere
/// and strictly increasing in H.
struct TransformedSimilarity {
    Eigen::MatrixXd S;

    int size() const { return static_cast<int>(S.rows()); }
};

/// Scalar Fisher transform with the near-1 clamp: arctanh(min(h, 1 - eps)).
double fisher_z(double h, double clamp_eps = 1e-10);

/// Builds H from fitted surfaces: each surface is flattened, normalized to
/// unit sum, and compared in L2. All grids must match; every surface needs
/// positive total mass.
SimilarityMatrix similarity_matrix(const std::vector<IntensityGrid>& surfaces);

TransformedSimilarity fisher_transform(const SimilarityMatrix& H,
                                       double clamp_eps = 1e-10);

} // namespace ppgroup
