#pragma once

// Alternating optimization of the three-player game (and the two-player
// preliminary variant), with parameter snapshots for the convergence
// diagnostics.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rcgan/dataset.hpp"
#include "rcgan/losses.hpp"
#include "rcgan/mlp.hpp"

namespace rcgan {

enum class OptKind { sgd, adam };
// Label corruption fed to the conditional generator during the preliminary
// probes (the discriminator's real pool keeps true labels either way).
enum class LabelMode { correct, random_labels, shifted };

std::string opt_name(OptKind k);
OptKind opt_from_name(const std::string& s);
std::string label_mode_name(LabelMode m);
LabelMode label_mode_from_name(const std::string& s);

struct OptimizerConfig {
    OptKind kind = OptKind::adam;
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    Variant variant = Variant::relaxed;
    int steps = 1500;
    int batch_size = 64;
    OptimizerConfig optimizer;
    int d_steps_per_g_step = 1;
    int snapshot_every = 250;
    LossWeights weights;
    std::uint64_t seed = 1;
    std::vector<int> net_hidden = {32, 32};
    bool spectral_norm = true;
    LabelMode source_label_mode = LabelMode::correct;
    // Steps during which only the discriminators and classifier update, so
    // the conditional real-pair structure exists before the generators start
    // committing to a map.
    int g_warmup_steps = 0;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// Net order used by snapshots and serialized directories.
const std::vector<std::string>& game_net_names();

struct Snapshot {
    int step = 0;
    ParamVector g_st, g_ts, d_t, d_s, c;
};

struct TrainResult {
    GameNets final_nets;
    std::vector<Snapshot> snapshots;
    std::vector<double> for_d_curve, for_g_curve, for_c_curve, target_acc_curve;
    std::uint64_t seed = 0;
    TrainConfig config;
};

// Builds the five players for class count k per the variant's arities.
GameNets make_nets(int k, int feature_dim, const TrainConfig& cfg, Rng& rng);

TrainResult train(const SsdaDataset& ds, const TrainConfig& cfg);

// Fraction with argmax C(x) == y; ties go to the lowest class index.
double evaluate_accuracy(const Mlp& c, const std::vector<LabeledPoint>& points);

// Result directory: nets as JSON, curves as CSV, snapshots as raw doubles
// with a JSON layout header.
void save_train_result(const TrainResult& r, const std::string& dir);
TrainResult load_train_result(const std::string& dir);

// Standard Adam/SGD over a flat parameter vector. direction = -1 descends,
// +1 ascends.
struct Optimizer {
    OptimizerConfig cfg;
    Vec m, v;
    long t = 0;

    explicit Optimizer(const OptimizerConfig& c) : cfg(c) {}
    void step(Vec& params, const Vec& grad, double direction);
};

}  // namespace rcgan
