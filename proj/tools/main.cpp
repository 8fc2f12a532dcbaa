#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ppgroup/pipeline.hpp"

using namespace ppgroup;

int main(int argc, char** argv)
{
    CLI::App app{"Spatial point-pattern group learning pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    bool fast = false;
    app.add_option("--config", config_path, "JSON config file (defaults apply)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed_override, "override the chain and study seeds")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_flag("--fast", fast, "coarse-grid profile for quick runs");

    std::string shots_csv;
    std::string intensity_dir;
    int chains = 5;
    int replicates_override = 0;

    auto* fit = app.add_subcommand("fit-intensity",
                                   "fit one intensity surface per label");
    fit->add_option("--shots", shots_csv, "shot log CSV (label,x,y)")->required();

    auto* cluster =
        app.add_subcommand("cluster", "group previously fitted surfaces");
    cluster->add_option("--intensities", intensity_dir,
                        "directory of intensity_*.csv files")
        ->required();

    auto* pipeline = app.add_subcommand(
        "pipeline", "fit-intensity followed by cluster in one run");
    pipeline->add_option("--shots", shots_csv, "shot log CSV (label,x,y)")
        ->required();

    auto* simulate =
        app.add_subcommand("simulate", "synthetic three-group recovery study");
    simulate->add_option("--replicates", replicates_override,
                         "override study.replicates");

    auto* stability = app.add_subcommand(
        "seed-stability", "rerun the chain under several seeds and compare");
    stability->add_option("--intensities", intensity_dir,
                          "directory of intensity_*.csv files")
        ->required();
    stability->add_option("--chains", chains, "number of chains")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig config = config_path.empty()
                                    ? PipelineConfig{}
                                    : PipelineConfig::load(config_path);
        if (fast) config.apply_fast_profile();
        if (seed_given) {
            config.mcmc.seed = seed_override;
            config.study.seed = seed_override;
        }
        if (replicates_override > 0) config.study.replicates = replicates_override;

        if (fit->parsed()) {
            cmd_fit_intensity(config, shots_csv, out_dir);
        } else if (cluster->parsed()) {
            cmd_cluster(config, intensity_dir, out_dir);
        } else if (pipeline->parsed()) {
            cmd_pipeline(config, shots_csv, out_dir);
        } else if (simulate->parsed()) {
            cmd_simulate(config, out_dir);
        } else if (stability->parsed()) {
            cmd_seed_stability(config, intensity_dir, out_dir, chains);
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
