#pragma once

// Experiment configuration and the command implementations behind the CLI.
// Commands return process exit codes: 0 success, 1 check failure; config/IO
// problems throw ConfigError, which the CLI maps to exit code 2.

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rcgan/dataset.hpp"
#include "rcgan/trainer.hpp"

namespace rcgan {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DiagnosticsConfig {
    double path_grid_min = -0.2;
    double path_grid_max = 1.2;
    int path_grid_points = 71;
    int eval_batch = 256;
    std::uint64_t path_seed = 99;
    int n_probe = 64;
    std::uint64_t probe_seed = 123;
    int transfer_n = 500;
    std::uint64_t transfer_seed = 321;
    int oracle_steps = 600;
    std::uint64_t oracle_seed = 17;

    nlohmann::json to_json() const;
    static DiagnosticsConfig from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    DatasetConfig dataset;
    TrainConfig train;
    DiagnosticsConfig diagnostics;

    nlohmann::json to_json() const;
    // Strict: unknown keys anywhere are rejected naming the offending key.
    // Absent train/dataset seeds inherit the experiment seed.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    void apply_seed(std::uint64_t s);  // reseeds experiment, dataset, training
};

// Classifier trained on the dataset's hidden-label target pool; evaluation
// oracle for transfer_quality.
Mlp train_oracle_classifier(const SsdaDataset& ds, int steps, std::uint64_t seed);

int cmd_verify_equilibrium(int n_random, int support_x, int k, std::uint64_t seed,
                           const std::string& out_dir, bool quiet);
int cmd_make_data(const ExperimentConfig& cfg, bool quiet);
int cmd_train(const ExperimentConfig& cfg, bool quiet);
int cmd_eval(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet);
int cmd_path_angle(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet);
int cmd_domination_study(const ExperimentConfig& cfg, bool quiet);
int cmd_transfer_quality(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet);

}  // namespace rcgan
