// bpl — batch driver for jump-process experiments.
//
//   bpl run <config.json> [--seed N] [--out DIR] [--jobs N]
//   bpl describe <model> [--param key=value ...]
//
// Exit codes: 0 all requested checks pass, 1 a check failed (report still
// written), 2 invalid configuration or unknown model.

#include "bpl/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>
#include <vector>

namespace {

nlohmann::json params_from_kv(const std::vector<std::string>& kvs) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& kv : kvs) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos) {
            throw bpl::config_error("--param expects key=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, pos);
        const std::string value = kv.substr(pos + 1);
        try {
            params[key] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::parse_error&) {
            params[key] = value;   // plain string
        }
    }
    return params;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bpl: Markov jump processes driven by Schrodinger dynamics"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = ".";
    int jobs = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", config_path, "path to the experiment config")->required();
    run->add_option("--seed", seed, "override the sampler seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--out", out_dir, "output directory (default: current)");
    run->add_option("--jobs", jobs, "worker count (default: available cores)");

    std::string model_name;
    std::vector<std::string> param_kvs;
    CLI::App* describe = app.add_subcommand("describe", "print a model card");
    describe->add_option("model", model_name, "TWO_LEVEL, LATTICE_1D, FOCK, or DIRAC")
        ->required();
    describe->add_option("--param", param_kvs, "model parameter as key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            const bpl::ExperimentConfig cfg = bpl::ExperimentConfig::from_file(config_path);
            bpl::RunOptions opt;
            if (seed_set) opt.seed_override = seed;
            opt.out_dir = out_dir;
            opt.jobs = jobs;
            return bpl::run_experiment(cfg, opt);
        }
        if (describe->parsed()) {
            std::cout << bpl::describe_model(model_name, params_from_kv(param_kvs));
            return 0;
        }
    } catch (const bpl::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
