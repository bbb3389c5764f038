#pragma once

// Training objectives of the adaptation game, in the preliminary
// (conditional-generator) and relaxed (unconditional-generator) variants,
// plus the marginal, pseudo-label and entropy regularizers. Each loss has a
// plain scalar evaluator and a tape builder that routes gradients into
// per-network sinks.

#include <nlohmann/json_fwd.hpp>

#include "rcgan/mlp.hpp"
#include "rcgan/numeric.hpp"
#include "rcgan/tape.hpp"

namespace rcgan {

enum class Variant { relaxed, preliminary };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct LossWeights {
    double lambda_gan = 1.0;
    double lambda_cycle = 10.0;
    double lambda_c = 1.0;
    double lambda_marg = 1.0;
    double lambda_pseudo = 0.5;
    double lambda_ent = 0.1;
    double alpha = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static LossWeights from_json(const nlohmann::json& j);
};

struct Batch {
    std::vector<LabeledPoint> source_xy;
    std::vector<LabeledPoint> target_xy;
    std::vector<Vec> target_unlabeled;
};

void validate_batch(const Batch& b, int k);

// The five players. Discriminators take (x, label) with label width k+1 (the
// extra channel is the marginal "any real target sample" class); d_s is the
// unconditional source-side discriminator; generators take x alone in the
// relaxed variant and (x, one-hot label) in the preliminary one.
struct GameNets {
    Mlp g_st, g_ts, d_t, d_s, c;

    int k() const { return c.output_dim(); }
    int feature_dim() const { return c.input_dim(); }
    void validate(Variant variant) const;
};

// Log-clamp applied to all discriminator/classifier probabilities inside
// losses (looser than the exact-math 1e-12 clamp; trained sigmoids saturate).
constexpr double kLossClamp = 1e-7;

// Gain on the one-hot label channels, matching label energy to the feature
// scale. Split per consumer: the generator's label pathway and the
// discriminator's label input trade off differently against spectral
// normalization's Lipschitz budget. (Calibration globals; pinned after study.)
extern double kGenLabelGain;
extern double kDiscLabelGain;

// --- individual losses (scalar evaluators) ---

double gan_loss_relaxed(const Mlp& d, const Mlp& g_st, const Mlp& c, const Batch& batch,
                        double alpha);
double gan_loss_preliminary(const Mlp& d, const Mlp& g_st, const Batch& batch, int k);
// Reverse-direction game: real = source x, fake = g_ts(target x [, label]).
double gan_loss_reverse(const Mlp& d_s, const Mlp& g_ts, const Batch& batch, int k,
                        Variant variant);
double cycle_loss(const Mlp& g_st, const Mlp& g_ts, const Batch& batch, int k, Variant variant);
double classifier_loss(const Mlp& c, const Mlp& g_st, const Batch& batch, Variant variant);
double marginal_loss(const Mlp& d, const Mlp& g_st, const Batch& batch, int k);
double pseudo_loss(const Mlp& d, const Mlp& c, const Batch& batch);
double entropy_loss(const Mlp& c, const Batch& batch);

// --- tape builders (nullptr sink = frozen network) ---

ad::Value gan_loss_relaxed_node(ad::Tape& t, const Mlp& d, const Mlp& g_st, const Mlp& c,
                                const Batch& batch, double alpha, MlpGrads* sink_d,
                                MlpGrads* sink_g, MlpGrads* sink_c);
ad::Value gan_loss_preliminary_node(ad::Tape& t, const Mlp& d, const Mlp& g_st,
                                    const Batch& batch, int k, MlpGrads* sink_d,
                                    MlpGrads* sink_g);
ad::Value gan_loss_reverse_node(ad::Tape& t, const Mlp& d_s, const Mlp& g_ts, const Batch& batch,
                                int k, Variant variant, MlpGrads* sink_d, MlpGrads* sink_g);
ad::Value cycle_loss_node(ad::Tape& t, const Mlp& g_st, const Mlp& g_ts, const Batch& batch,
                          int k, Variant variant, MlpGrads* sink_st, MlpGrads* sink_ts);
ad::Value classifier_loss_node(ad::Tape& t, const Mlp& c, const Mlp& g_st, const Batch& batch,
                               Variant variant, MlpGrads* sink_c, MlpGrads* sink_g);
ad::Value marginal_loss_node(ad::Tape& t, const Mlp& d, const Mlp& g_st, const Batch& batch,
                             int k, MlpGrads* sink_d, MlpGrads* sink_g);
ad::Value pseudo_loss_node(ad::Tape& t, const Mlp& d, const Mlp& c, const Batch& batch,
                           MlpGrads* sink_d);
ad::Value entropy_loss_node(ad::Tape& t, const Mlp& c, const Batch& batch, MlpGrads* sink_c);

// --- per-player objectives ---

struct PlayerObjectives {
    double for_d = 0.0;  // discriminators ascend on this
    double for_g = 0.0;  // generators descend
    double for_c = 0.0;  // classifier descends
};

// for_d = lg*(gan + reverse) + lm*marg + lp*pseudo (pseudo pool = its own batch,
// usually a fresh unlabeled subsample). Regularizer terms apply to the relaxed
// variant only; zero-weight terms are skipped entirely.
ad::Value for_d_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const Batch& pseudo_batch, const LossWeights& w, Variant variant,
                     MlpGrads* sink_dt, MlpGrads* sink_ds);
// for_g = lg*(generator adversarial terms, minimax sign) + lc*cycle + lm*(marginal G term).
ad::Value for_g_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const LossWeights& w, Variant variant, MlpGrads* sink_gst,
                     MlpGrads* sink_gts);
// for_c = lc*classifier + lent*entropy + (1-alpha)*lg*E[log(1-D(x, C(x)))],
// the last two in the relaxed variant only.
ad::Value for_c_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const LossWeights& w, Variant variant, MlpGrads* sink_c);

PlayerObjectives total_loss(const GameNets& nets, const Batch& batch, const LossWeights& w,
                            Variant variant);
PlayerObjectives total_loss(const GameNets& nets, const Batch& batch, const Batch& pseudo_batch,
                            const LossWeights& w, Variant variant);

}  // namespace rcgan
