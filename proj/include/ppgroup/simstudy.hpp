#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ppgroup/court.hpp"
#include "ppgroup/evaluation.hpp"
#include "ppgroup/intensity.hpp"
#include "ppgroup/mfm.hpp"
#include "ppgroup/rng.hpp"

namespace ppgroup {

/// Isotropic Gaussian component of a base surface; weights are relative.
struct GaussianBump {
    double x = 0.0;
    double y = 0.0;
    double sd = 1.0;
    double weight = 1.0;
};

/// Hoop center in court coordinates (baseline at x = 0, rim 5.25 ft out).
inline constexpr Point kHoopCenter{5.25, 25.0};

/// Three-point arc radius from the hoop center, feet.
inline constexpr double kThreePointRadius = 23.75;

/// Bump descriptors for the three synthetic archetypes: rim-heavy, broadly
/// distributed, and rim plus a three-point arc.
std::vector<std::vector<GaussianBump>> default_group_bases();

/// Evaluates a bump mixture at the cell centers and rescales it to integrate
/// to `scale` expected points.
IntensityGrid intensity_from_bumps(const GridSpec& grid,
                                   const std::vector<GaussianBump>& bumps,
                                   double scale);

/// The three default base surfaces, each integrating to `scale`.
std::vector<IntensityGrid> base_intensities(const GridSpec& grid, double scale);

/// Adds |N(0, noise_variance)| independently to every cell.
IntensityGrid perturb_intensity(const IntensityGrid& base,
                                double noise_variance, Rng& rng);

/// Draws a pattern from the piecewise-constant surface: a Poisson count per
/// cell, each point uniform inside its cell.
PointPattern simulate_pattern(const IntensityGrid& intensity, Rng& rng,
                              const std::string& label = "sim");

struct SimConfig {
    GridSpec grid{};
    std::vector<std::vector<GaussianBump>> groups = default_group_bases();
    int players_per_group = 25;
    double noise_variance = 0.5;
    double points_per_player = 500.0;

    void validate() const;
};

struct SimReplicate {
    Partition true_labels;
    std::vector<IntensityGrid> true_intensities;
    std::vector<PointPattern> patterns;
};

/// One synthetic cohort: per player, a perturbed copy of the group's base
/// surface and a pattern drawn from it. Seeds are derived per player, so the
/// result does not depend on evaluation order.
SimReplicate generate_replicate(const SimConfig& config, std::uint64_t seed);

/// Everything downstream of the data: fit, similarity, chain, baselines.
struct AnalysisParams {
    CovarianceSpec covariance{};
    FitOptions fit{};
    double similarity_clamp = 1e-10;
    MfmPriors priors{};
    int mcmc_iters = 1000;
    int mcmc_burnin = 500;
    int kmeans_restarts = 1;
    unsigned threads = 0; // 0 = hardware concurrency
};

struct ReplicateReport {
    std::uint64_t seed = 0;
    int k_hat = 0;  // modal posterior group count
    int k_dahl = 0; // group count of the Dahl partition
    double ri_mfm = 0.0;
    double ri_kmeans = 0.0;
    double runtime_seconds = 0.0;
    std::map<int, double> k_histogram;
    Partition dahl_partition;
};

/// Full pipeline on one simulated replicate: fit each pattern, build the
/// transformed similarities, run the chain, summarize, and score against the
/// truth alongside a k-means baseline given the true group count.
ReplicateReport run_replicate(const SimConfig& config,
                              const AnalysisParams& analysis,
                              std::uint64_t seed);

struct StudyReport {
    std::vector<ReplicateReport> replicates;
    double mean_ri_mfm = 0.0;
    double min_ri_mfm = 0.0;
    double max_ri_mfm = 0.0;
    double mean_ri_kmeans = 0.0;
    std::map<int, int> k_hat_counts;
};

StudyReport run_study(const SimConfig& config, const AnalysisParams& analysis,
                      int replicates, std::uint64_t master_seed);

} // namespace ppgroup
