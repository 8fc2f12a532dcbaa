#include "ppgroup/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "ppgroup/evaluation.hpp"
#include "ppgroup/io.hpp"
#include "ppgroup/similarity.hpp"
#include "ppgroup/threading.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ppgroup {

namespace {

// Fetches j[key], enforcing that only known keys appear.
const json* maybe_get(const json& j, const std::string& key)
{
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where)
{
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw InputError("config: unknown key '" + it.key() + "' in " + where);
}

std::string sanitize_label(const std::string& label)
{
    std::string out;
    for (char c : label)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '.' || c == '_')
                   ? c
                   : '_';
    return out.empty() ? std::string("unnamed") : out;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory: " + dir);
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write: " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

json khist_to_json(const std::map<int, double>& hist)
{
    json out = json::object();
    for (const auto& [k, v] : hist) out[std::to_string(k)] = v;
    return out;
}

} // namespace

PipelineConfig PipelineConfig::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json_text(text, path);
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text,
                                              const std::string& origin)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": " + e.what());
    }

    PipelineConfig c;
    check_keys(j,
               {"grid", "covariance", "fit", "similarity", "priors", "mcmc",
                "study", "min_attempts", "threads"},
               "top level");
    if (const json* g = maybe_get(j, "grid")) {
        check_keys(*g, {"x_min", "x_max", "y_min", "y_max", "nx", "ny"}, "grid");
        c.grid.domain.x_min = g->value("x_min", c.grid.domain.x_min);
        c.grid.domain.x_max = g->value("x_max", c.grid.domain.x_max);
        c.grid.domain.y_min = g->value("y_min", c.grid.domain.y_min);
        c.grid.domain.y_max = g->value("y_max", c.grid.domain.y_max);
        c.grid.nx = g->value("nx", c.grid.nx);
        c.grid.ny = g->value("ny", c.grid.ny);
    }
    if (const json* v = maybe_get(j, "covariance")) {
        check_keys(*v, {"kernel", "sigma2", "rho", "mean"}, "covariance");
        c.covariance.kernel = kernel_from_string(
            v->value("kernel", kernel_to_string(c.covariance.kernel)));
        c.covariance.sigma2 = v->value("sigma2", c.covariance.sigma2);
        c.covariance.rho = v->value("rho", c.covariance.rho);
        if (v->contains("mean") && !(*v)["mean"].is_null())
            c.covariance.mean = (*v)["mean"].get<double>();
    }
    if (const json* f = maybe_get(j, "fit")) {
        check_keys(*f, {"tol", "max_iter"}, "fit");
        c.fit.tol = f->value("tol", c.fit.tol);
        c.fit.max_iter = f->value("max_iter", c.fit.max_iter);
    }
    if (const json* s = maybe_get(j, "similarity")) {
        check_keys(*s, {"clamp_eps"}, "similarity");
        c.similarity_clamp = s->value("clamp_eps", c.similarity_clamp);
    }
    if (const json* p = maybe_get(j, "priors")) {
        check_keys(*p, {"gamma", "alpha", "beta", "k0", "mu0", "k_poisson_mean"},
                   "priors");
        c.priors.gamma = p->value("gamma", c.priors.gamma);
        c.priors.alpha = p->value("alpha", c.priors.alpha);
        c.priors.beta = p->value("beta", c.priors.beta);
        c.priors.k0 = p->value("k0", c.priors.k0);
        if (p->contains("mu0") && !(*p)["mu0"].is_null())
            c.priors.mu0 = (*p)["mu0"].get<double>();
        c.priors.k_prior.poisson_mean =
            p->value("k_poisson_mean", c.priors.k_prior.poisson_mean);
    }
    if (const json* m = maybe_get(j, "mcmc")) {
        check_keys(*m, {"iters", "burnin", "seed"}, "mcmc");
        c.mcmc.iters = m->value("iters", c.mcmc.iters);
        c.mcmc.burnin = m->value("burnin", c.mcmc.burnin);
        c.mcmc.seed = m->value("seed", c.mcmc.seed);
    }
    if (const json* s = maybe_get(j, "study")) {
        check_keys(*s,
                   {"replicates", "players_per_group", "noise_variance",
                    "points_per_player", "kmeans_restarts", "seed"},
                   "study");
        c.study.replicates = s->value("replicates", c.study.replicates);
        c.study.players_per_group =
            s->value("players_per_group", c.study.players_per_group);
        c.study.noise_variance =
            s->value("noise_variance", c.study.noise_variance);
        c.study.points_per_player =
            s->value("points_per_player", c.study.points_per_player);
        c.study.kmeans_restarts =
            s->value("kmeans_restarts", c.study.kmeans_restarts);
        c.study.seed = s->value("seed", c.study.seed);
    }
    c.min_attempts = j.value("min_attempts", c.min_attempts);
    c.threads = j.value("threads", c.threads);

    c.grid.validate();
    c.covariance.validate();
    c.priors.validate();
    return c;
}

std::string PipelineConfig::to_json_text() const
{
    json j;
    j["grid"] = {{"x_min", grid.domain.x_min}, {"x_max", grid.domain.x_max},
                 {"y_min", grid.domain.y_min}, {"y_max", grid.domain.y_max},
                 {"nx", grid.nx},              {"ny", grid.ny}};
    j["covariance"] = {{"kernel", kernel_to_string(covariance.kernel)},
                       {"sigma2", covariance.sigma2},
                       {"rho", covariance.rho},
                       {"mean", covariance.mean ? json(*covariance.mean)
                                                : json(nullptr)}};
    j["fit"] = {{"tol", fit.tol}, {"max_iter", fit.max_iter}};
    j["similarity"] = {{"clamp_eps", similarity_clamp}};
    j["priors"] = {{"gamma", priors.gamma},
                   {"alpha", priors.alpha},
                   {"beta", priors.beta},
                   {"k0", priors.k0},
                   {"mu0", priors.mu0 ? json(*priors.mu0) : json(nullptr)},
                   {"k_poisson_mean", priors.k_prior.poisson_mean}};
    j["mcmc"] = {{"iters", mcmc.iters}, {"burnin", mcmc.burnin},
                 {"seed", mcmc.seed}};
    j["study"] = {{"replicates", study.replicates},
                  {"players_per_group", study.players_per_group},
                  {"noise_variance", study.noise_variance},
                  {"points_per_player", study.points_per_player},
                  {"kmeans_restarts", study.kmeans_restarts},
                  {"seed", study.seed}};
    j["min_attempts"] = min_attempts;
    j["threads"] = threads;
    return j.dump(2) + "\n";
}

void PipelineConfig::apply_fast_profile()
{
    grid.nx = 24;
    grid.ny = 25;
}

AnalysisParams PipelineConfig::analysis_params() const
{
    AnalysisParams a;
    a.covariance = covariance;
    a.fit = fit;
    a.similarity_clamp = similarity_clamp;
    a.priors = priors;
    a.mcmc_iters = mcmc.iters;
    a.mcmc_burnin = mcmc.burnin;
    a.kmeans_restarts = study.kmeans_restarts;
    a.threads = threads;
    return a;
}

SimConfig PipelineConfig::sim_config() const
{
    SimConfig s;
    s.grid = grid;
    s.players_per_group = study.players_per_group;
    s.noise_variance = study.noise_variance;
    s.points_per_player = study.points_per_player;
    return s;
}

// ---------------------------------------------------------------------------
// fit-intensity
// ---------------------------------------------------------------------------

void cmd_fit_intensity(const PipelineConfig& config,
                       const std::string& shots_csv, const std::string& out_dir)
{
    ensure_dir(out_dir);
    const ShotCsvResult parsed =
        parse_shot_csv(shots_csv, config.grid.domain, config.min_attempts);

    std::vector<std::string> labels;
    std::vector<const PointPattern*> patterns;
    for (const auto& [label, pattern] : parsed.patterns) {
        labels.push_back(label);
        patterns.push_back(&pattern);
    }

    const int n = static_cast<int>(labels.size());
    std::vector<LgcpFit> fits(n);
    std::vector<std::string> failures(n);
    parallel_for(
        n,
        [&](int i) {
            try {
                const CountGrid counts = bin_counts(*patterns[i], config.grid);
                fits[i] = fit_lgcp_map(counts, config.covariance, config.fit);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        },
        config.threads);

    json manifest;
    manifest["rejected_rows"] = parsed.rejected;
    manifest["grid"] = {{"nx", config.grid.nx}, {"ny", config.grid.ny}};
    manifest["labels"] = labels;
    json reports = json::object();
    json failed = json::object();
    for (int i = 0; i < n; ++i) {
        if (!failures[i].empty()) {
            failed[labels[i]] = failures[i];
            continue;
        }
        const std::string file = "intensity_" + sanitize_label(labels[i]) + ".csv";
        write_intensity_csv((fs::path(out_dir) / file).string(),
                            fits[i].intensity);
        reports[labels[i]] = {{"file", file},
                              {"points", patterns[i]->size()},
                              {"iterations", fits[i].report.iterations},
                              {"grad_sup_norm", fits[i].report.grad_sup_norm},
                              {"log_posterior", fits[i].report.log_posterior}};
    }
    manifest["fits"] = reports;
    manifest["failures"] = failed;
    write_text((fs::path(out_dir) / "fit_manifest.json").string(),
               manifest.dump(2) + "\n");

    if (!failed.empty())
        throw NumericalError(std::to_string(failed.size()) +
                             " fit(s) failed; see fit_manifest.json");
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

namespace {

struct LoadedSurfaces {
    std::vector<std::string> labels;
    std::vector<IntensityGrid> surfaces;
};

LoadedSurfaces load_intensity_dir(const std::string& dir)
{
    if (!fs::is_directory(dir))
        throw InputError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("intensity_", 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2)
        throw InputError("need at least two intensity_*.csv files in " + dir);

    LoadedSurfaces out;
    for (const auto& file : files) {
        out.surfaces.push_back(read_intensity_csv(file));
        std::string stem = fs::path(file).stem().string();
        out.labels.push_back(stem.substr(std::string("intensity_").size()));
        if (!(out.surfaces.back().spec == out.surfaces.front().spec))
            throw InputError("grid mismatch between " + files.front() + " and " +
                             file);
    }
    return out;
}

json dahl_to_json(const DahlSummary& dahl, const PosteriorDraws& draws,
                  const std::vector<std::string>& labels)
{
    std::map<int, int> sizes;
    for (int z : dahl.partition) ++sizes[z];
    std::vector<int> group_sizes;
    for (const auto& [g, s] : sizes) group_sizes.push_back(s);

    json j;
    j["labels"] = labels;
    j["partition"] = dahl.partition;
    j["group_count"] = static_cast<int>(sizes.size());
    j["group_sizes"] = group_sizes;
    j["c_ls_index"] = dahl.c_ls_index;
    j["c_ls_distance"] = dahl.distance;
    j["k_histogram"] = khist_to_json(posterior_k_histogram(draws));
    j["seed"] = draws.seed;
    j["iters"] = draws.iters;
    j["burnin"] = draws.burnin;
    return j;
}

} // namespace

void cmd_cluster(const PipelineConfig& config, const std::string& intensity_dir,
                 const std::string& out_dir)
{
    ensure_dir(out_dir);
    const LoadedSurfaces loaded = load_intensity_dir(intensity_dir);

    const SimilarityMatrix H = similarity_matrix(loaded.surfaces);
    const TransformedSimilarity S =
        fisher_transform(H, config.similarity_clamp);

    const PosteriorDraws draws = run_chain(S, config.priors, config.mcmc);
    const DahlSummary dahl = dahl_summary(draws);
    const Embedding2D embedding = classical_mds(H, 2);

    const fs::path out(out_dir);
    write_matrix_csv((out / "similarity_H.csv").string(), H.H);
    write_matrix_csv((out / "similarity_S.csv").string(), S.S);
    write_labels_csv((out / "labels.csv").string(), loaded.labels);
    write_draws_csv((out / "draws.csv").string(), draws);
    write_text((out / "summary.json").string(),
               dahl_to_json(dahl, draws, loaded.labels).dump(2) + "\n");

    std::ofstream emb((out / "embedding.csv").string());
    if (!emb) throw InputError("cannot write embedding.csv");
    emb << "label,u,v\n";
    for (std::size_t i = 0; i < loaded.labels.size(); ++i)
        emb << loaded.labels[i] << ','
            << format_double(embedding.coordinates(i, 0)) << ','
            << format_double(embedding.coordinates(i, 1)) << '\n';
}

void cmd_pipeline(const PipelineConfig& config, const std::string& shots_csv,
                  const std::string& out_dir)
{
    cmd_fit_intensity(config, shots_csv, out_dir);
    cmd_cluster(config, out_dir, out_dir);
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void cmd_simulate(const PipelineConfig& config, const std::string& out_dir)
{
    ensure_dir(out_dir);
    const StudyReport study =
        run_study(config.sim_config(), config.analysis_params(),
                  config.study.replicates, config.study.seed);

    std::ofstream lines((fs::path(out_dir) / "study.jsonl").string());
    if (!lines) throw InputError("cannot write study.jsonl");
    for (const auto& rep : study.replicates) {
        json j = {{"seed", rep.seed},
                  {"k_hat", rep.k_hat},
                  {"k_dahl", rep.k_dahl},
                  {"ri_mfm", rep.ri_mfm},
                  {"ri_kmeans", rep.ri_kmeans},
                  {"runtime", rep.runtime_seconds},
                  {"k_histogram", khist_to_json(rep.k_histogram)}};
        lines << j.dump() << '\n';
    }

    json agg;
    agg["replicates"] = config.study.replicates;
    agg["mean_ri_mfm"] = study.mean_ri_mfm;
    agg["min_ri_mfm"] = study.min_ri_mfm;
    agg["max_ri_mfm"] = study.max_ri_mfm;
    agg["mean_ri_kmeans"] = study.mean_ri_kmeans;
    json khist = json::object();
    for (const auto& [k, c] : study.k_hat_counts) khist[std::to_string(k)] = c;
    agg["k_hat_counts"] = khist;
    // Published values from the original 50-replicate design, for context.
    agg["reference_ri"] = {{"mfm", 0.9988},
                           {"kmeans", 0.9005},
                           {"dbscan", 0.7642},
                           {"mean_shift", 0.7380}};
    write_text((fs::path(out_dir) / "study_summary.json").string(),
               agg.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// seed-stability
// ---------------------------------------------------------------------------

void cmd_seed_stability(const PipelineConfig& config,
                        const std::string& intensity_dir,
                        const std::string& out_dir, int chains)
{
    if (chains < 2) throw InputError("seed-stability: need at least 2 chains");
    ensure_dir(out_dir);
    const LoadedSurfaces loaded = load_intensity_dir(intensity_dir);
    const SimilarityMatrix H = similarity_matrix(loaded.surfaces);
    const TransformedSimilarity S =
        fisher_transform(H, config.similarity_clamp);

    std::vector<PosteriorDraws> all(chains);
    parallel_for(
        chains,
        [&](int c) {
            McmcOptions opt = config.mcmc;
            opt.burnin = 0; // keep every iteration for the trace
            opt.seed = derive_seed(config.mcmc.seed, c);
            all[c] = run_chain(S, config.priors, opt);
        },
        config.threads);

    // Dahl summaries over the retained (post burn-in) tail of each chain.
    std::vector<Partition> finals;
    for (const auto& draws : all) {
        PosteriorDraws post;
        post.seed = draws.seed;
        post.iters = config.mcmc.iters;
        post.burnin = config.mcmc.burnin;
        post.partitions.assign(draws.partitions.begin() + config.mcmc.burnin,
                               draws.partitions.end());
        post.k_per_draw.assign(draws.k_per_draw.begin() + config.mcmc.burnin,
                               draws.k_per_draw.end());
        finals.push_back(dahl_summary(post).partition);
    }

    Eigen::MatrixXd pairwise = Eigen::MatrixXd::Ones(chains, chains);
    double sum = 0.0;
    int count = 0;
    for (int a = 0; a < chains; ++a)
        for (int b = a + 1; b < chains; ++b) {
            const double ri = rand_index(finals[a], finals[b]);
            pairwise(a, b) = pairwise(b, a) = ri;
            sum += ri;
            ++count;
        }
    write_matrix_csv((fs::path(out_dir) / "seed_ri.csv").string(), pairwise);

    // Per-iteration agreement with the first chain's final grouping.
    std::ofstream trace((fs::path(out_dir) / "seed_trace.csv").string());
    if (!trace) throw InputError("cannot write seed_trace.csv");
    trace << "chain,iter,ri\n";
    for (int c = 0; c < chains; ++c)
        for (int it = 0; it < all[c].draws(); ++it)
            trace << c + 1 << ',' << it + 1 << ','
                  << format_double(rand_index(all[c].partitions[it], finals[0]))
                  << '\n';

    json j;
    j["chains"] = chains;
    j["mean_pairwise_ri"] = count ? sum / count : 1.0;
    std::vector<std::uint64_t> seeds;
    for (const auto& draws : all) seeds.push_back(draws.seed);
    j["seeds"] = seeds;
    write_text((fs::path(out_dir) / "seed_stability.json").string(),
               j.dump(2) + "\n");
}

} // namespace ppgroup
