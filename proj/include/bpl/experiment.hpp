// experiment.hpp — Batch experiment driver: model construction from a JSON
// config, check execution with retry-on-flake, and artifact emission.

#pragma once

#include "bpl/models.hpp"
#include "bpl/process.hpp"
#include "bpl/verify.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bpl {

// Invalid configuration or unknown model; mapped to exit code 2 by the CLI.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { TwoLevel, Lattice1D, Fock, Dirac };

ModelKind model_kind_from_string(const std::string& name);
const char* to_string(ModelKind kind);

struct ExperimentConfig {
    ModelKind model{ModelKind::TwoLevel};
    nlohmann::json params;            // model parameters, defaults applied at build
    SamplerConfig sampler;
    int M{10000};
    double t0{0.0};
    double horizon{1.0};
    std::vector<double> checkpoints;
    std::vector<nlohmann::json> checks;
    std::string out_trajectories{"trajectories.csv"};
    std::string out_report{"report.json"};
    std::string out_convergence{"convergence.csv"};

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::string& path);
};

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::string out_dir{"."};
    int jobs{0};
};

// Everything an experiment may need, depending on the model kind.
struct BuiltModel {
    ModelKind kind{ModelKind::TwoLevel};
    std::optional<JumpSystem> jump;
    std::optional<FockModel> fock;
    std::optional<DiracSystem> dirac;
    std::optional<GaussianPacket> packet;
    nlohmann::json effective_params;
};

BuiltModel build_model(ModelKind kind, const nlohmann::json& params, double node_eps);

// Runs the experiment, writes trajectories/report/convergence artifacts under
// opt.out_dir, and returns 0 when every requested check passes, 1 otherwise.
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

// Model card: dimensions, Hamiltonian structure, known node locations, and
// the effective (defaulted) parameters. Throws config_error for unknown names.
std::string describe_model(const std::string& name, const nlohmann::json& params);

}  // namespace bpl
