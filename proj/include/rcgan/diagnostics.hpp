#pragma once

// Convergence and label-domination diagnostics: the Path-Angle trace of the
// game vector field along the init-to-final parameter line, sensitivity-based
// domination scoring of conditional generators, and transfer-quality metrics
// against the dataset's exact domain map.

#include <cstdint>
#include <functional>
#include <vector>

#include "rcgan/dataset.hpp"
#include "rcgan/losses.hpp"
#include "rcgan/trainer.hpp"

namespace rcgan {

struct PathAngleTrace {
    std::vector<double> ts;
    std::vector<double> cosines;     // in [-1, 1]; 0 by convention where v = 0
    std::vector<double> grad_norms;  // ||v(theta_t)||
    double path_direction_norm = 0.0;
};

using VectorField = std::function<Vec(const Vec&)>;

// Evaluates an arbitrary vector field along theta_init + t*(theta_final -
// theta_init); cosine = <v, dir> / (||v|| ||dir||). Errors when the path
// direction is zero.
PathAngleTrace trace_vector_field(const VectorField& field, const Vec& theta_init,
                                  const Vec& theta_final, const std::vector<double>& ts);

// Game vector field of a training run: each player's own-objective gradient,
// signed so that following v is that player's improvement direction
// (+grad for the ascending discriminators, -grad for generators/classifier),
// concatenated in net order [g_st, g_ts, d_t, d_s, c]. Evaluated on one fixed
// seeded batch at every t.
PathAngleTrace path_angle(const TrainResult& result, const SsdaDataset& ds,
                          const LossWeights& weights, Variant variant,
                          const std::vector<double>& grid, int eval_batch, std::uint64_t seed);

struct DominationReport {
    double label_sensitivity = 0.0;
    double input_sensitivity = 0.0;
    double domination_ratio = 0.0;  // label / max(input, 1e-12)
};

// Mean pairwise output displacement when the label input varies with x fixed
// (label_sensitivity) versus when x varies with the label fixed
// (input_sensitivity). Unconditional generators report label_sensitivity = 0.
DominationReport domination_score(const Mlp& gen, bool conditional, const SsdaDataset& ds,
                                  int n_probe, std::uint64_t seed);

struct TransferQuality {
    double mean_map_error = 0.0;    // mean ||G(x) - ideal_transfer(x)||
    double label_consistency = 0.0; // fraction argmax c_oracle(G(x)) == y
};

// c_oracle is a classifier trained on abundant labeled target data (an
// evaluation oracle, not part of the adaptation protocol). Conditional
// generators are fed the probe's true label.
TransferQuality transfer_quality(const Mlp& gen, const SsdaDataset& ds, const Mlp& c_oracle,
                                 int n, std::uint64_t seed);

std::vector<double> uniform_grid(double lo, double hi, int points);

}  // namespace rcgan
