#include "ppgroup/evaluation.hpp"

#include <cmath>
#include <limits>

#include "ppgroup/errors.hpp"
#include "ppgroup/rng.hpp"

namespace ppgroup {

double rand_index(const Partition& a, const Partition& b)
{
    const int n = static_cast<int>(a.size());
    if (a.size() != b.size())
        throw InputError("rand index: partitions have different sizes");
    if (n < 2) throw InputError("rand index: need at least two items");

    long agree = 0;
    long pairs = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const bool ta = a[i] == a[j];
            const bool tb = b[i] == b[j];
            agree += ta == tb;
            ++pairs;
        }
    return static_cast<double>(agree) / static_cast<double>(pairs);
}

namespace {

double sq_dist(const Eigen::MatrixXd& x, int row, const Eigen::RowVectorXd& c)
{
    return (x.row(row) - c).squaredNorm();
}

// D^2-weighted seeding.
Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, int k, Rng& rng)
{
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd centers(k, x.cols());
    std::uniform_int_distribution<int> first(0, n - 1);
    centers.row(0) = x.row(first(rng));

    Eigen::VectorXd d2(n);
    for (int i = 0; i < n; ++i) d2[i] = sq_dist(x, i, centers.row(0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 1; c < k; ++c) {
        const double total = d2.sum();
        int pick = n - 1;
        if (total > 0.0) {
            const double u = unif(rng) * total;
            double cum = 0.0;
            for (int i = 0; i < n; ++i) {
                cum += d2[i];
                if (u <= cum) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng); // all points coincide with chosen centers
        }
        centers.row(c) = x.row(pick);
        for (int i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], sq_dist(x, i, centers.row(c)));
    }
    return centers;
}

KMeansResult lloyd(const Eigen::MatrixXd& x, int k, Rng& rng)
{
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd centers = kmeanspp_init(x, k, rng);
    std::vector<int> labels(n, 0);

    KMeansResult result;
    const int max_iter = 200;
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = iter == 0;
        double wcss = 0.0;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(x, i, centers.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best + 1) changed = true;
            labels[i] = best + 1;
            wcss += best_d;
        }
        result.wcss = wcss;
        result.wcss_trace.push_back(wcss);
        if (!changed) break;

        centers.setZero();
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            centers.row(labels[i] - 1) += x.row(i);
            ++counts[labels[i] - 1];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                centers.row(c) /= static_cast<double>(counts[c]);
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = sq_dist(x, i, centers.row(labels[i] - 1));
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                centers.row(c) = x.row(far);
            }
        }
    }
    result.labels = labels;
    return result;
}

} // namespace

KMeansResult kmeans_partition(const Eigen::MatrixXd& features, int k,
                              std::uint64_t seed, int restarts)
{
    const int n = static_cast<int>(features.rows());
    if (k < 1 || k > n)
        throw InputError("kmeans: k must lie in [1, n]");
    if (restarts < 1) throw InputError("kmeans: restarts must be >= 1");

    Rng rng = make_rng(seed);
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        KMeansResult run = lloyd(features, k, rng);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

Embedding2D classical_mds(const SimilarityMatrix& H, int dim)
{
    const int n = H.size();
    if (dim < 1) throw InputError("mds: dim must be >= 1");
    if (n < dim + 1) throw InputError("mds: need at least dim + 1 patterns");

    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double d = -std::log(H.H(i, j));
            b(i, j) = -0.5 * d * d;
        }
    // Double centering.
    const Eigen::VectorXd row_mean = b.rowwise().mean();
    const double grand = row_mean.mean();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b(i, j) += grand - row_mean[i] - row_mean[j];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success)
        throw NumericalError("mds: eigendecomposition failed");

    Embedding2D out;
    out.coordinates = Eigen::MatrixXd::Zero(n, dim);
    for (int d = 0; d < dim; ++d) {
        const int idx = n - 1 - d; // eigenvalues come back ascending
        const double ev = eig.eigenvalues()[idx];
        if (ev <= 0.0) {
            out.degenerate = true;
            continue; // axis stays zero
        }
        out.coordinates.col(d) = eig.eigenvectors().col(idx) * std::sqrt(ev);
    }
    // Remove roundoff drift so columns are exactly centered.
    const Eigen::RowVectorXd mean = out.coordinates.colwise().mean();
    out.coordinates.rowwise() -= mean;
    return out;
}

} // namespace ppgroup
