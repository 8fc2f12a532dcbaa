#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppgroup/court.hpp"
#include "ppgroup/intensity.hpp"
#include "ppgroup/mfm.hpp"
#include "ppgroup/simstudy.hpp"

namespace ppgroup {

struct StudyConfig {
    int replicates = 10;
    int players_per_group = 25;
    double noise_variance = 0.5;
    double points_per_player = 500.0;
    int kmeans_restarts = 1;
    std::uint64_t seed = 7;
};

/// Every tunable of the pipeline, with defaults matching the court study.
/// Loadable from a JSON file; unknown keys are rejected.
struct PipelineConfig {
    GridSpec grid{};
    CovarianceSpec covariance{};
    FitOptions fit{};
    double similarity_clamp = 1e-10;
    MfmPriors priors{};
    McmcOptions mcmc{1000, 500, 42};
    StudyConfig study{};
    long min_attempts = 0;
    unsigned threads = 0; // 0 = hardware concurrency

    static PipelineConfig load(const std::string& path);
    static PipelineConfig from_json_text(const std::string& text,
                                         const std::string& origin = "config");
    std::string to_json_text() const;

    /// Coarse 2 ft grid for quick smoke runs.
    void apply_fast_profile();

    AnalysisParams analysis_params() const;
    SimConfig sim_config() const;
};

/// Fits one surface per label from a shot log and writes intensity files plus
/// a manifest. Throws after recording per-label failures when any fit fails.
void cmd_fit_intensity(const PipelineConfig& config,
                       const std::string& shots_csv,
                       const std::string& out_dir);

/// Groups previously fitted surfaces: writes H, S, labels, retained draws,
/// the Dahl summary, and the 2-D embedding.
void cmd_cluster(const PipelineConfig& config, const std::string& intensity_dir,
                 const std::string& out_dir);

/// fit-intensity followed by cluster, sharing one output directory.
void cmd_pipeline(const PipelineConfig& config, const std::string& shots_csv,
                  const std::string& out_dir);

/// Synthetic-cohort study: per-replicate JSON lines plus an aggregate report.
void cmd_simulate(const PipelineConfig& config, const std::string& out_dir);

/// Runs several chains with distinct seeds on one set of surfaces and reports
/// pairwise Rand indices of the Dahl partitions plus per-iteration traces.
void cmd_seed_stability(const PipelineConfig& config,
                        const std::string& intensity_dir,
                        const std::string& out_dir, int chains);

} // namespace ppgroup
