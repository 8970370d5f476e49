#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "qbsde/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"quadratic BSDE toolkit"};
    std::string config_path;
    std::string out_dir;
    std::string experiment;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    int steps = 0;
    app.add_option("--config", config_path, "JSON experiment configuration")->required();
    app.add_option("--seed", seed, "override config seed");
    app.add_option("--out-dir", out_dir, "override config out_dir");
    app.add_option("--experiment", experiment, "override config experiment");
    app.add_option("--paths", paths, "override numerics.M");
    app.add_option("--steps", steps, "override numerics.N");
    CLI11_PARSE(app, argc, argv);

    try {
        qbsde::ExperimentConfig cfg = qbsde::load_config_file(config_path);
        if (app.count("--seed"))
            cfg.seed = seed;
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        if (!experiment.empty())
            cfg.experiment = experiment;
        if (paths != 0)
            cfg.M = paths;
        if (steps != 0)
            cfg.N = steps;
        return qbsde::run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << '\n';
        return 1;
    }
}
