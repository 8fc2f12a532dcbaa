#include "ppgroup/simstudy.hpp"

#include <chrono>
#include <cmath>

#include "ppgroup/threading.hpp"

namespace ppgroup {

std::vector<std::vector<GaussianBump>> default_group_bases()
{
    const double hx = kHoopCenter.x;
    const double hy = kHoopCenter.y;

    std::vector<GaussianBump> rim = {{hx, hy, 3.0, 1.0}};

    std::vector<GaussianBump> broad = {{hx + 3.0, hy, 7.0, 0.5},
                                       {hx + 13.0, hy, 10.0, 0.5}};

    std::vector<GaussianBump> rim_and_arc = {{hx, hy, 2.8, 0.5}};
    const int arc_bumps = 7;
    for (int i = 0; i < arc_bumps; ++i) {
        const double deg = -72.0 + 144.0 * i / (arc_bumps - 1);
        const double rad = deg * M_PI / 180.0;
        rim_and_arc.push_back({hx + kThreePointRadius * std::cos(rad),
                               hy + kThreePointRadius * std::sin(rad), 2.8,
                               0.5 / arc_bumps});
    }
    return {rim, broad, rim_and_arc};
}

IntensityGrid intensity_from_bumps(const GridSpec& grid,
                                   const std::vector<GaussianBump>& bumps,
                                   double scale)
{
    grid.validate();
    if (!(scale > 0.0)) throw InputError("base intensity: scale must be > 0");
    if (bumps.empty()) throw InputError("base intensity: no bumps given");

    const int n = grid.cells();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < n; ++c) {
        const Point ctr = grid.cell_center(c);
        double v = 0.0;
        for (const auto& b : bumps) {
            const double r2 = (ctr.x - b.x) * (ctr.x - b.x) +
                              (ctr.y - b.y) * (ctr.y - b.y);
            v += b.weight / (2.0 * M_PI * b.sd * b.sd) *
                 std::exp(-r2 / (2.0 * b.sd * b.sd));
        }
        lambda[c] = std::max(v, 1e-300);
    }
    lambda *= scale / (lambda.sum() * grid.cell_area());
    return IntensityGrid::from_lambda(grid, std::move(lambda));
}

std::vector<IntensityGrid> base_intensities(const GridSpec& grid, double scale)
{
    std::vector<IntensityGrid> out;
    for (const auto& bumps : default_group_bases())
        out.push_back(intensity_from_bumps(grid, bumps, scale));
    return out;
}

IntensityGrid perturb_intensity(const IntensityGrid& base,
                                double noise_variance, Rng& rng)
{
    if (noise_variance < 0.0)
        throw InputError("perturb: noise variance must be >= 0");
    if (noise_variance == 0.0) return base;

    std::normal_distribution<double> noise(0.0, std::sqrt(noise_variance));
    Eigen::VectorXd lambda = base.lambda;
    for (Eigen::Index c = 0; c < lambda.size(); ++c)
        lambda[c] += std::abs(noise(rng));
    return IntensityGrid::from_lambda(base.spec, std::move(lambda));
}

PointPattern simulate_pattern(const IntensityGrid& intensity, Rng& rng,
                              const std::string& label)
{
    const GridSpec& spec = intensity.spec;
    const double area = spec.cell_area();
    PointPattern pattern;
    pattern.label = label;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int c = 0; c < spec.cells(); ++c) {
        const double mean = intensity.lambda[c] * area;
        if (!(mean > 0.0)) continue;
        std::poisson_distribution<int> pois(mean);
        const int count = pois(rng);
        if (count == 0) continue;
        const Point ctr = spec.cell_center(c);
        for (int m = 0; m < count; ++m) {
            const double x = ctr.x + (unif(rng) - 0.5) * spec.dx();
            const double y = ctr.y + (unif(rng) - 0.5) * spec.dy();
            pattern.points.push_back({x, y});
        }
    }
    return pattern;
}

void SimConfig::validate() const
{
    grid.validate();
    if (groups.empty()) throw InputError("sim config: need at least one group");
    if (players_per_group < 1)
        throw InputError("sim config: players_per_group must be >= 1");
    if (noise_variance < 0.0)
        throw InputError("sim config: noise variance must be >= 0");
    if (!(points_per_player > 0.0))
        throw InputError("sim config: expected points must be > 0");
}

SimReplicate generate_replicate(const SimConfig& config, std::uint64_t seed)
{
    config.validate();
    std::vector<IntensityGrid> bases;
    for (const auto& bumps : config.groups)
        bases.push_back(
            intensity_from_bumps(config.grid, bumps, config.points_per_player));

    SimReplicate rep;
    const int groups = static_cast<int>(bases.size());
    const int n = groups * config.players_per_group;
    for (int p = 0; p < n; ++p) {
        const int g = p / config.players_per_group;
        Rng noise_rng = make_rng(derive_seed(seed, 2 * p));
        Rng pattern_rng = make_rng(derive_seed(seed, 2 * p + 1));
        IntensityGrid truth =
            perturb_intensity(bases[g], config.noise_variance, noise_rng);
        PointPattern pattern = simulate_pattern(
            truth, pattern_rng, "sim_g" + std::to_string(g + 1) + "_p" +
                                    std::to_string(p % config.players_per_group + 1));
        rep.true_labels.push_back(g + 1);
        rep.true_intensities.push_back(std::move(truth));
        rep.patterns.push_back(std::move(pattern));
    }
    return rep;
}

ReplicateReport run_replicate(const SimConfig& config,
                              const AnalysisParams& analysis,
                              std::uint64_t seed)
{
    const auto start = std::chrono::steady_clock::now();
    const SimReplicate rep = generate_replicate(config, seed);
    const int n = static_cast<int>(rep.patterns.size());

    std::vector<IntensityGrid> fitted(n, IntensityGrid{});
    parallel_for(
        n,
        [&](int i) {
            const CountGrid counts = bin_counts(rep.patterns[i], config.grid);
            fitted[i] =
                fit_lgcp_map(counts, analysis.covariance, analysis.fit).intensity;
        },
        analysis.threads);

    const SimilarityMatrix H = similarity_matrix(fitted);
    const TransformedSimilarity S =
        fisher_transform(H, analysis.similarity_clamp);

    McmcOptions mcmc;
    mcmc.iters = analysis.mcmc_iters;
    mcmc.burnin = analysis.mcmc_burnin;
    mcmc.seed = derive_seed(seed, 1000003);
    const PosteriorDraws draws = run_chain(S, analysis.priors, mcmc);
    const DahlSummary dahl = dahl_summary(draws);

    ReplicateReport report;
    report.seed = seed;
    report.k_histogram = posterior_k_histogram(draws);
    double best = -1.0;
    for (const auto& [k, freq] : report.k_histogram)
        if (freq > best) { // ties resolve to the smallest k (map order)
            best = freq;
            report.k_hat = k;
        }
    report.k_dahl =
        *std::max_element(dahl.partition.begin(), dahl.partition.end());
    report.dahl_partition = dahl.partition;
    report.ri_mfm = rand_index(dahl.partition, rep.true_labels);

    // k-means on the unit-sum flattened surfaces, given the true group count.
    Eigen::MatrixXd features(n, config.grid.cells());
    for (int i = 0; i < n; ++i)
        features.row(i) = fitted[i].lambda.transpose() / fitted[i].lambda.sum();
    const KMeansResult km =
        kmeans_partition(features, static_cast<int>(config.groups.size()),
                         derive_seed(seed, 1000004), analysis.kmeans_restarts);
    report.ri_kmeans = rand_index(km.labels, rep.true_labels);

    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

StudyReport run_study(const SimConfig& config, const AnalysisParams& analysis,
                      int replicates, std::uint64_t master_seed)
{
    if (replicates < 1) throw InputError("study: need at least one replicate");
    StudyReport study;
    for (int r = 0; r < replicates; ++r) {
        ReplicateReport rep =
            run_replicate(config, analysis, derive_seed(master_seed, r));
        study.k_hat_counts[rep.k_hat] += 1;
        study.replicates.push_back(std::move(rep));
    }
    double sum_mfm = 0.0;
    double sum_km = 0.0;
    study.min_ri_mfm = 1.0;
    study.max_ri_mfm = 0.0;
    for (const auto& rep : study.replicates) {
        sum_mfm += rep.ri_mfm;
        sum_km += rep.ri_kmeans;
        study.min_ri_mfm = std::min(study.min_ri_mfm, rep.ri_mfm);
        study.max_ri_mfm = std::max(study.max_ri_mfm, rep.ri_mfm);
    }
    study.mean_ri_mfm = sum_mfm / replicates;
    study.mean_ri_kmeans = sum_km / replicates;
    return study;
}

} // namespace ppgroup
