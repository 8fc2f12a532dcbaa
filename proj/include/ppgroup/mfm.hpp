#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ppgroup/rng.hpp"
#include "ppgroup/similarity.hpp"

namespace ppgroup {

/// Prior on the number of groups: Poisson(mean) truncated to {1, 2, ...}.
struct KPrior {
    double poisson_mean = 1.0;

    double log_pmf(int k) const;
};

struct MfmPriors {
    double gamma = 1.0; // Dirichlet concentration
    double alpha = 1.0; // Gamma shape for block precisions
    double beta = 1.0;  // Gamma rate for block precisions
    double k0 = 1.0;    // prior precision scale for block means
    std::optional<double> mu0{}; // block-mean prior center; default: mean of
                                 // the off-diagonal transformed similarities
    KPrior k_prior{};

    void validate() const;
    double mu0_value() const;
};

/// Fills in mu0 from the data when it was left unset.
MfmPriors resolve_priors(MfmPriors priors, const TransformedSimilarity& S);

/// log V_n(w) for w = 1..n, the urn coefficients slowing new-group creation.
struct VnTable {
    int n = 0;
    std::vector<double> log_vn; // index w-1

    double log_ratio(int w) const; // log V_n(w+1) - log V_n(w)
};

/// Sums the coefficient series in log space until the next term falls below
/// rel_tol times the running sum. max_k, when positive, truncates the series
/// (used by convergence oracles).
VnTable compute_log_vn(int n, const MfmPriors& priors, double rel_tol = 1e-12,
                       long max_k = 0);

/// Sufficient statistics of one block of transformed similarities.
struct BlockStats {
    long count = 0;
    double mean = 0.0;
    double var = 0.0; // sample variance, 0 when count < 2
};

BlockStats make_block_stats(const std::vector<double>& values);

/// Stats over unordered pairs {i<j} whose labels are {r, s} (1-based labels).
BlockStats pair_block_stats(const TransformedSimilarity& S,
                            const std::vector<int>& z, int r, int s);

/// Stats of row i restricted to group t, skipping j == i.
BlockStats row_block_stats(const TransformedSimilarity& S,
                           const std::vector<int>& z, int i, int t);

/// Gamma draw for a block precision: shape alpha + n/2, rate
/// beta + (n-1) var / 2 + k0 n (mean - mu0)^2 / (2 (k0 + n)).
double sample_block_precision(const BlockStats& stats, const MfmPriors& priors,
                              Rng& rng);

/// Normal draw for a block mean: center (k0 mu0 + n mean) / (k0 + n),
/// variance 1 / ((k0 + n) T).
double sample_block_mean(const BlockStats& stats, double precision,
                         const MfmPriors& priors, Rng& rng);

/// Log Normal-Gamma marginal of row i's entries grouped by the partition of
/// the other patterns (the new-group factor m(S_i), in logs). z_i is ignored.
double log_marginal_row(const TransformedSimilarity& S,
                        const std::vector<int>& z, int i,
                        const MfmPriors& priors);

/// Partition state of the sampler: labels 1..k contiguous, symmetric k-by-k
/// block means and precisions.
struct ClusterState {
    std::vector<int> z;
    Eigen::MatrixXd U;
    Eigen::MatrixXd T;

    int group_count() const { return static_cast<int>(U.rows()); }
    std::vector<int> group_sizes() const;
    void validate() const;
};

/// Everyone in one group; block parameters at their prior centers.
ClusterState single_group_state(int n, const MfmPriors& priors);

struct MembershipMove {
    int group = 0;       // label assigned to the pattern (post-move)
    bool created = false; // true when a new group was opened
};

/// One conditional draw of z_i given everything else: the urn weights
/// (existing-group size + gamma times the pairwise Normal likelihoods; the
/// V_n ratio times gamma times the row marginal for a new group) are
/// normalized in log space. New groups instantiate their block parameters by
/// conjugate draws against each existing group.
MembershipMove update_membership(ClusterState& state,
                                 const TransformedSimilarity& S, int i,
                                 const VnTable& vn, const MfmPriors& priors,
                                 Rng& rng);

/// One full sweep: refresh all block precisions, then all block means, then
/// each membership in index order.
ClusterState gibbs_sweep(ClusterState state, const TransformedSimilarity& S,
                         const VnTable& vn, const MfmPriors& priors, Rng& rng);

struct McmcOptions {
    int iters = 1000;
    int burnin = 500;
    std::uint64_t seed = 0;
};

struct PosteriorDraws {
    std::vector<std::vector<int>> partitions; // post-burn-in membership vectors
    std::vector<int> k_per_draw;
    std::uint64_t seed = 0;
    int iters = 0;
    int burnin = 0;

    int draws() const { return static_cast<int>(partitions.size()); }
};

/// Runs the collapsed sampler from the single-group start and keeps the last
/// iters - burnin membership vectors.
PosteriorDraws run_chain(const TransformedSimilarity& S,
                         const MfmPriors& priors, const McmcOptions& options);

struct DahlSummary {
    std::vector<int> partition;
    int c_ls_index = 0; // 1-based index of the selected draw
    double distance = 0.0;
};

/// Least-squares summary: the retained draw whose membership matrix is
/// closest to the element-wise mean matrix; ties go to the earliest draw.
DahlSummary dahl_summary(const PosteriorDraws& draws);

/// Frequencies of the per-draw group counts; values sum to one.
std::map<int, double> posterior_k_histogram(const PosteriorDraws& draws);

} // namespace ppgroup
