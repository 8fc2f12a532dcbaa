#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ppgroup/similarity.hpp"

namespace ppgroup {

/// Group label per pattern; ids need not be contiguous.
using Partition = std::vector<int>;

/// Fraction of the n-choose-2 pairs on which two partitions agree (both
/// together or both apart). Equals 1 iff they match up to relabeling.
double rand_index(const Partition& a, const Partition& b);

struct KMeansResult {
    Partition labels;            // 1..k
    double wcss = 0.0;           // within-cluster sum of squares
    std::vector<double> wcss_trace; // objective after each Lloyd iteration
};

/// Lloyd's algorithm from k-means++ seeding; best of `restarts` runs by
/// within-cluster sum of squares. Rows of `features` are observations.
KMeansResult kmeans_partition(const Eigen::MatrixXd& features, int k,
                              std::uint64_t seed, int restarts = 1);

struct Embedding2D {
    Eigen::MatrixXd coordinates; // n x dim, column means zero
    bool degenerate = false;     // fewer positive eigenvalues than dims
};

/// Classical (Torgerson) scaling of the distances d_ij = -log H_ij: double-
/// centers -d^2/2 and keeps the top `dim` eigenpairs, truncating negative
/// eigenvalues at zero.
Embedding2D classical_mds(const SimilarityMatrix& H, int dim = 2);

} // namespace ppgroup
