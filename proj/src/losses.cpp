#include "rcgan/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace rcgan {

double kGenLabelGain = 12.0;
double kDiscLabelGain = 4.0;

namespace {

// Running sum with fixed order; mean() of an empty accumulator is 0 (vacuous
// expectation, matching the skipped-term semantics of marginal_loss).
struct MeanAcc {
    ad::Tape& t;
    ad::Value acc{};
    int n = 0;

    explicit MeanAcc(ad::Tape& tape) : t(tape) {}
    void add(ad::Value s) {
        acc = acc.valid() ? t.add(acc, s) : s;
        ++n;
    }
    ad::Value mean() { return n > 0 ? t.scale(acc, 1.0 / n) : t.scalar_leaf(0.0); }
};

ad::Value one_minus(ad::Tape& t, ad::Value x) {
    return t.lincomb(t.scalar_leaf(1.0), 1.0, x, -1.0);
}

// log D and log(1-D) of the conditional discriminator on (x-node, label-node).
ad::Value d_out(ad::Tape& t, const Mlp& d, ad::Value x, ad::Value label, MlpGrads* sink) {
    return d.apply(t, t.concat(x, label), sink);
}

ad::Value log_d(ad::Tape& t, ad::Value dv) { return t.log_clamp(dv, kLossClamp); }
ad::Value log_one_minus_d(ad::Tape& t, ad::Value dv) {
    return t.log_clamp(one_minus(t, dv), kLossClamp);
}

// Label channels are one-hot scaled to the feature magnitude (the image
// analog puts a full constant plane per class, so label energy is comparable
// to pixel energy; a unit one-hot next to O(6) coordinates would starve the
// label pathway).
Vec gen_label(int width, int index) {
    Vec v(width, 0.0);
    v[index] = kGenLabelGain;
    return v;
}
Vec disc_label(int width, int index) {
    Vec v(width, 0.0);
    v[index] = kDiscLabelGain;
    return v;
}

// Generator input under the given variant: x alone or (x, one-hot(y)).
Vec gen_input(const Vec& x, int y, int k, Variant variant) {
    if (variant == Variant::relaxed) return x;
    Vec in = x;
    Vec oh = gen_label(k, y);
    in.insert(in.end(), oh.begin(), oh.end());
    return in;
}

void check_d_width(const Mlp& d, int feat_dim, int k, const char* who) {
    if (d.input_dim() != feat_dim + k + 1) {
        throw std::invalid_argument(std::string(who) + ": discriminator label width must be K+1 (input dim " +
                                    std::to_string(d.input_dim()) + ", expected " +
                                    std::to_string(feat_dim + k + 1) + ")");
    }
}

}  // namespace

std::string variant_name(Variant v) {
    return v == Variant::relaxed ? "relaxed" : "preliminary";
}

Variant variant_from_name(const std::string& s) {
    if (s == "relaxed") return Variant::relaxed;
    if (s == "preliminary") return Variant::preliminary;
    throw std::invalid_argument("unknown variant: " + s);
}

void LossWeights::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument(std::string("LossWeights: ") + name + " must be >= 0");
        }
    };
    nonneg(lambda_gan, "lambda_gan");
    nonneg(lambda_cycle, "lambda_cycle");
    nonneg(lambda_c, "lambda_c");
    nonneg(lambda_marg, "lambda_marg");
    nonneg(lambda_pseudo, "lambda_pseudo");
    nonneg(lambda_ent, "lambda_ent");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("LossWeights: alpha must lie in [0,1]");
    }
}

nlohmann::json LossWeights::to_json() const {
    return nlohmann::json{{"lambda_gan", lambda_gan},       {"lambda_cycle", lambda_cycle},
                          {"lambda_c", lambda_c},           {"lambda_marg", lambda_marg},
                          {"lambda_pseudo", lambda_pseudo}, {"lambda_ent", lambda_ent},
                          {"alpha", alpha}};
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
    LossWeights w;
    if (j.contains("lambda_gan")) w.lambda_gan = j.at("lambda_gan").get<double>();
    if (j.contains("lambda_cycle")) w.lambda_cycle = j.at("lambda_cycle").get<double>();
    if (j.contains("lambda_c")) w.lambda_c = j.at("lambda_c").get<double>();
    if (j.contains("lambda_marg")) w.lambda_marg = j.at("lambda_marg").get<double>();
    if (j.contains("lambda_pseudo")) w.lambda_pseudo = j.at("lambda_pseudo").get<double>();
    if (j.contains("lambda_ent")) w.lambda_ent = j.at("lambda_ent").get<double>();
    if (j.contains("alpha")) w.alpha = j.at("alpha").get<double>();
    w.validate();
    return w;
}

void validate_batch(const Batch& b, int k) {
    if (b.source_xy.empty() && b.target_xy.empty() && b.target_unlabeled.empty()) {
        throw std::invalid_argument("Batch: all lists are empty");
    }
    for (const auto& p : b.source_xy) {
        if (p.y < 0 || p.y >= k) {
            throw std::invalid_argument("Batch: source label " + std::to_string(p.y) +
                                        " outside [0," + std::to_string(k) + ")");
        }
    }
    for (const auto& p : b.target_xy) {
        if (p.y < 0 || p.y >= k) {
            throw std::invalid_argument("Batch: target label " + std::to_string(p.y) +
                                        " outside [0," + std::to_string(k) + ")");
        }
    }
}

void GameNets::validate(Variant variant) const {
    int f = feature_dim();
    int kk = k();
    check_d_width(d_t, f, kk, "GameNets");
    if (d_t.output_dim() != 1 || d_s.output_dim() != 1) {
        throw std::invalid_argument("GameNets: discriminators must output a single sigmoid");
    }
    if (d_s.input_dim() != f) {
        throw std::invalid_argument("GameNets: d_s is unconditional and takes x alone");
    }
    int gen_in = variant == Variant::relaxed ? f : f + kk;
    if (g_st.input_dim() != gen_in || g_ts.input_dim() != gen_in) {
        throw std::invalid_argument("GameNets: generator input dim " +
                                    std::to_string(g_st.input_dim()) + " does not match the " +
                                    variant_name(variant) + " variant (expected " +
                                    std::to_string(gen_in) + ")");
    }
    if (g_st.output_dim() != f || g_ts.output_dim() != f) {
        throw std::invalid_argument("GameNets: generators must map back to feature space");
    }
}

ad::Value gan_loss_relaxed_node(ad::Tape& t, const Mlp& d, const Mlp& g_st, const Mlp& c,
                                const Batch& batch, double alpha, MlpGrads* sink_d,
                                MlpGrads* sink_g, MlpGrads* sink_c) {
    int k = c.output_dim();
    check_d_width(d, c.input_dim(), k, "gan_loss_relaxed");
    if (batch.target_xy.empty()) {
        throw std::invalid_argument("gan_loss_relaxed: empty target_xy (the real-pair term needs labeled target data)");
    }
    MeanAcc real(t);
    for (const auto& p : batch.target_xy) {
        ad::Value dv = d_out(t, d, t.leaf(p.x), t.leaf(disc_label(k + 1, p.y)), sink_d);
        real.add(log_d(t, dv));
    }
    ad::Value out = real.mean();
    if (alpha > 0.0) {
        MeanAcc fake(t);
        for (const auto& p : batch.source_xy) {
            ad::Value gx = g_st.apply(t, t.leaf(p.x), sink_g);
            ad::Value dv = d_out(t, d, gx, t.leaf(disc_label(k + 1, p.y)), sink_d);
            fake.add(log_one_minus_d(t, dv));
        }
        out = t.lincomb(out, 1.0, fake.mean(), alpha);
    }
    if (alpha < 1.0) {
        // E_{y~C(.|x)}[log(1 - D(x, y))]: the discriminator sees hard labels
        // only, the classifier gets exact gradients through the class
        // probabilities.
        MeanAcc cls(t);
        for (const auto& x : batch.target_unlabeled) {
            ad::Value probs = c.apply(t, t.leaf(x), sink_c);
            ad::Value acc{};
            for (int y = 0; y < k; ++y) {
                ad::Value dv = d_out(t, d, t.leaf(x), t.leaf(disc_label(k + 1, y)), sink_d);
                ad::Value term = t.mul(t.pick(probs, y), log_one_minus_d(t, dv));
                acc = acc.valid() ? t.add(acc, term) : term;
            }
            cls.add(acc);
        }
        out = t.lincomb(out, 1.0, cls.mean(), 1.0 - alpha);
    }
    return out;
}

ad::Value gan_loss_preliminary_node(ad::Tape& t, const Mlp& d, const Mlp& g_st,
                                    const Batch& batch, int k, MlpGrads* sink_d,
                                    MlpGrads* sink_g) {
    check_d_width(d, g_st.output_dim(), k, "gan_loss_preliminary");
    if (batch.target_xy.empty() || batch.source_xy.empty()) {
        throw std::invalid_argument("gan_loss_preliminary: needs nonempty target_xy and source_xy");
    }
    MeanAcc real(t);
    for (const auto& p : batch.target_xy) {
        ad::Value dv = d_out(t, d, t.leaf(p.x), t.leaf(disc_label(k + 1, p.y)), sink_d);
        real.add(log_d(t, dv));
    }
    MeanAcc fake(t);
    for (const auto& p : batch.source_xy) {
        ad::Value gx = g_st.apply(t, t.leaf(gen_input(p.x, p.y, k, Variant::preliminary)), sink_g);
        ad::Value dv = d_out(t, d, gx, t.leaf(disc_label(k + 1, p.y)), sink_d);
        fake.add(log_one_minus_d(t, dv));
    }
    return t.add(real.mean(), fake.mean());
}

ad::Value gan_loss_reverse_node(ad::Tape& t, const Mlp& d_s, const Mlp& g_ts, const Batch& batch,
                                int k, Variant variant, MlpGrads* sink_d, MlpGrads* sink_g) {
    if (batch.source_xy.empty()) {
        throw std::invalid_argument("gan_loss_reverse: empty source_xy (the real pool is the source domain)");
    }
    MeanAcc real(t);
    for (const auto& p : batch.source_xy) {
        real.add(log_d(t, d_s.apply(t, t.leaf(p.x), sink_d)));
    }
    MeanAcc fake(t);
    for (const auto& p : batch.target_xy) {
        ad::Value gx = g_ts.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_g);
        fake.add(log_one_minus_d(t, d_s.apply(t, gx, sink_d)));
    }
    return t.add(real.mean(), fake.mean());
}

ad::Value cycle_loss_node(ad::Tape& t, const Mlp& g_st, const Mlp& g_ts, const Batch& batch,
                          int k, Variant variant, MlpGrads* sink_st, MlpGrads* sink_ts) {
    bool conditional = variant == Variant::preliminary;
    int feat = g_st.output_dim();
    int expect_in = conditional ? feat + k : feat;
    if (g_st.input_dim() != expect_in || g_ts.input_dim() != expect_in) {
        throw std::invalid_argument("cycle_loss: generator arity does not match the " +
                                    variant_name(variant) + " variant");
    }
    auto attach_label = [&](ad::Value h, int y) {
        return conditional ? t.concat(h, t.leaf(gen_label(k, y))) : h;
    };
    MeanAcc src(t);
    for (const auto& p : batch.source_xy) {
        ad::Value x = t.leaf(p.x);
        ad::Value fwd = g_st.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_st);
        ad::Value rec = g_ts.apply(t, attach_label(fwd, p.y), sink_ts);
        src.add(t.sum_abs(t.lincomb(rec, 1.0, x, -1.0)));
    }
    MeanAcc tgt(t);
    for (const auto& p : batch.target_xy) {
        ad::Value x = t.leaf(p.x);
        ad::Value bwd = g_ts.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_ts);
        ad::Value rec = g_st.apply(t, attach_label(bwd, p.y), sink_st);
        tgt.add(t.sum_abs(t.lincomb(rec, 1.0, x, -1.0)));
    }
    return t.add(src.mean(), tgt.mean());
}

ad::Value classifier_loss_node(ad::Tape& t, const Mlp& c, const Mlp& g_st, const Batch& batch,
                               Variant variant, MlpGrads* sink_c, MlpGrads* sink_g) {
    if (batch.source_xy.empty() && batch.target_xy.empty()) {
        throw std::invalid_argument("classifier_loss: both labeled lists are empty");
    }
    int k = c.output_dim();
    auto nll = [&](ad::Value probs, int y) {
        return t.scale(t.log_clamp(t.pick(probs, y), kLossClamp), -1.0);
    };
    MeanAcc gen(t);
    for (const auto& p : batch.source_xy) {
        ad::Value gx = g_st.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_g);
        gen.add(nll(c.apply(t, gx, sink_c), p.y));
    }
    MeanAcc tgt(t);
    for (const auto& p : batch.target_xy) {
        tgt.add(nll(c.apply(t, t.leaf(p.x), sink_c), p.y));
    }
    return t.add(gen.mean(), tgt.mean());
}

ad::Value marginal_loss_node(ad::Tape& t, const Mlp& d, const Mlp& g_st, const Batch& batch,
                             int k, MlpGrads* sink_d, MlpGrads* sink_g) {
    check_d_width(d, g_st.output_dim(), k, "marginal_loss");
    Vec marg = disc_label(k + 1, k);
    MeanAcc lab(t);
    for (const auto& p : batch.target_xy) {
        lab.add(log_d(t, d_out(t, d, t.leaf(p.x), t.leaf(marg), sink_d)));
    }
    MeanAcc unl(t);
    for (const auto& x : batch.target_unlabeled) {
        unl.add(log_d(t, d_out(t, d, t.leaf(x), t.leaf(marg), sink_d)));
    }
    MeanAcc fake(t);
    for (const auto& p : batch.source_xy) {
        ad::Value gx = g_st.apply(t, t.leaf(p.x), sink_g);
        fake.add(log_one_minus_d(t, d_out(t, d, gx, t.leaf(marg), sink_d)));
    }
    return t.add(t.add(lab.mean(), unl.mean()), fake.mean());
}

ad::Value pseudo_loss_node(ad::Tape& t, const Mlp& d, const Mlp& c, const Batch& batch,
                           MlpGrads* sink_d) {
    if (batch.target_unlabeled.empty()) {
        throw std::invalid_argument("pseudo_loss: empty target_unlabeled");
    }
    int k = c.output_dim();
    MeanAcc acc(t);
    for (const auto& x : batch.target_unlabeled) {
        // Pseudo labels are detached: plain forward, hard argmax, lowest index
        // wins ties. Gradient reaches D only.
        int y_hat = argmax(c.forward(x));
        acc.add(log_d(t, d_out(t, d, t.leaf(x), t.leaf(disc_label(k + 1, y_hat)), sink_d)));
    }
    return acc.mean();
}

ad::Value entropy_loss_node(ad::Tape& t, const Mlp& c, const Batch& batch, MlpGrads* sink_c) {
    if (batch.target_unlabeled.empty()) {
        throw std::invalid_argument("entropy_loss: empty target_unlabeled");
    }
    MeanAcc acc(t);
    for (const auto& x : batch.target_unlabeled) {
        acc.add(t.neg_entropy_sum(c.apply(t, t.leaf(x), sink_c)));
    }
    return acc.mean();
}

double gan_loss_relaxed(const Mlp& d, const Mlp& g_st, const Mlp& c, const Batch& batch,
                        double alpha) {
    ad::Tape t;
    return t.scalar(gan_loss_relaxed_node(t, d, g_st, c, batch, alpha, nullptr, nullptr, nullptr));
}

double gan_loss_preliminary(const Mlp& d, const Mlp& g_st, const Batch& batch, int k) {
    ad::Tape t;
    return t.scalar(gan_loss_preliminary_node(t, d, g_st, batch, k, nullptr, nullptr));
}

double gan_loss_reverse(const Mlp& d_s, const Mlp& g_ts, const Batch& batch, int k,
                        Variant variant) {
    ad::Tape t;
    return t.scalar(gan_loss_reverse_node(t, d_s, g_ts, batch, k, variant, nullptr, nullptr));
}

double cycle_loss(const Mlp& g_st, const Mlp& g_ts, const Batch& batch, int k, Variant variant) {
    ad::Tape t;
    return t.scalar(cycle_loss_node(t, g_st, g_ts, batch, k, variant, nullptr, nullptr));
}

double classifier_loss(const Mlp& c, const Mlp& g_st, const Batch& batch, Variant variant) {
    ad::Tape t;
    return t.scalar(classifier_loss_node(t, c, g_st, batch, variant, nullptr, nullptr));
}

double marginal_loss(const Mlp& d, const Mlp& g_st, const Batch& batch, int k) {
    ad::Tape t;
    return t.scalar(marginal_loss_node(t, d, g_st, batch, k, nullptr, nullptr));
}

double pseudo_loss(const Mlp& d, const Mlp& c, const Batch& batch) {
    ad::Tape t;
    return t.scalar(pseudo_loss_node(t, d, c, batch, nullptr));
}

double entropy_loss(const Mlp& c, const Batch& batch) {
    ad::Tape t;
    return t.scalar(entropy_loss_node(t, c, batch, nullptr));
}

ad::Value for_d_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const Batch& pseudo_batch, const LossWeights& w, Variant variant,
                     MlpGrads* sink_dt, MlpGrads* sink_ds) {
    ad::Value out = t.scalar_leaf(0.0);
    if (w.lambda_gan > 0.0) {
        ad::Value gan = variant == Variant::relaxed
                            ? gan_loss_relaxed_node(t, nets.d_t, nets.g_st, nets.c, batch,
                                                    w.alpha, sink_dt, nullptr, nullptr)
                            : gan_loss_preliminary_node(t, nets.d_t, nets.g_st, batch, nets.k(),
                                                        sink_dt, nullptr);
        ad::Value rev = gan_loss_reverse_node(t, nets.d_s, nets.g_ts, batch, nets.k(), variant,
                                              sink_ds, nullptr);
        out = t.lincomb(out, 1.0, t.add(gan, rev), w.lambda_gan);
    }
    if (variant == Variant::relaxed) {
        if (w.lambda_marg > 0.0) {
            out = t.lincomb(out, 1.0,
                            marginal_loss_node(t, nets.d_t, nets.g_st, batch, nets.k(), sink_dt,
                                               nullptr),
                            w.lambda_marg);
        }
        if (w.lambda_pseudo > 0.0) {
            out = t.lincomb(out, 1.0,
                            pseudo_loss_node(t, nets.d_t, nets.c, pseudo_batch, sink_dt),
                            w.lambda_pseudo);
        }
    }
    return out;
}

ad::Value for_g_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const LossWeights& w, Variant variant, MlpGrads* sink_gst,
                     MlpGrads* sink_gts) {
    int k = nets.k();
    ad::Value out = t.scalar_leaf(0.0);
    if (w.lambda_gan > 0.0) {
        // Forward fool term: the generator minimizes its share of the minimax
        // value, alpha-weighted in the relaxed game.
        MeanAcc fwd(t);
        for (const auto& p : batch.source_xy) {
            ad::Value gx = nets.g_st.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_gst);
            ad::Value dv = d_out(t, nets.d_t, gx, t.leaf(disc_label(k + 1, p.y)), nullptr);
            fwd.add(log_one_minus_d(t, dv));
        }
        double fwd_w = variant == Variant::relaxed ? w.alpha : 1.0;
        out = t.lincomb(out, 1.0, fwd.mean(), w.lambda_gan * fwd_w);
        MeanAcc rev(t);
        for (const auto& p : batch.target_xy) {
            ad::Value gx = nets.g_ts.apply(t, t.leaf(gen_input(p.x, p.y, k, variant)), sink_gts);
            rev.add(log_one_minus_d(t, nets.d_s.apply(t, gx, nullptr)));
        }
        out = t.lincomb(out, 1.0, rev.mean(), w.lambda_gan);
    }
    if (w.lambda_cycle > 0.0) {
        out = t.lincomb(out, 1.0,
                        cycle_loss_node(t, nets.g_st, nets.g_ts, batch, k, variant, sink_gst,
                                        sink_gts),
                        w.lambda_cycle);
    }
    if (variant == Variant::relaxed && w.lambda_marg > 0.0) {
        MeanAcc marg(t);
        Vec mlabel = disc_label(k + 1, k);
        for (const auto& p : batch.source_xy) {
            ad::Value gx = nets.g_st.apply(t, t.leaf(p.x), sink_gst);
            marg.add(log_one_minus_d(t, d_out(t, nets.d_t, gx, t.leaf(mlabel), nullptr)));
        }
        out = t.lincomb(out, 1.0, marg.mean(), w.lambda_marg);
    }
    return out;
}

ad::Value for_c_node(ad::Tape& t, const GameNets& nets, const Batch& batch,
                     const LossWeights& w, Variant variant, MlpGrads* sink_c) {
    ad::Value out = t.scalar_leaf(0.0);
    if (w.lambda_c > 0.0) {
        out = t.lincomb(out, 1.0,
                        classifier_loss_node(t, nets.c, nets.g_st, batch, variant, sink_c,
                                             nullptr),
                        w.lambda_c);
    }
    if (variant == Variant::relaxed) {
        if (w.lambda_ent > 0.0) {
            out = t.lincomb(out, 1.0, entropy_loss_node(t, nets.c, batch, sink_c), w.lambda_ent);
        }
        if (w.lambda_gan > 0.0 && w.alpha < 1.0) {
            // The classifier minimizes its term of the minimax value: it wants
            // D to accept (x, C(x)) pairs as real.
            MeanAcc cls(t);
            for (const auto& x : batch.target_unlabeled) {
                ad::Value probs = nets.c.apply(t, t.leaf(x), sink_c);
                ad::Value label = t.concat(probs, t.scalar_leaf(0.0));
                cls.add(log_one_minus_d(t, d_out(t, nets.d_t, t.leaf(x), label, nullptr)));
            }
            out = t.lincomb(out, 1.0, cls.mean(), (1.0 - w.alpha) * w.lambda_gan);
        }
    }
    return out;
}

PlayerObjectives total_loss(const GameNets& nets, const Batch& batch, const Batch& pseudo_batch,
                            const LossWeights& w, Variant variant) {
    w.validate();
    nets.validate(variant);
    validate_batch(batch, nets.k());
    PlayerObjectives obj;
    {
        ad::Tape t;
        obj.for_d = t.scalar(for_d_node(t, nets, batch, pseudo_batch, w, variant, nullptr, nullptr));
    }
    {
        ad::Tape t;
        obj.for_g = t.scalar(for_g_node(t, nets, batch, w, variant, nullptr, nullptr));
    }
    {
        ad::Tape t;
        obj.for_c = t.scalar(for_c_node(t, nets, batch, w, variant, nullptr));
    }
    return obj;
}

PlayerObjectives total_loss(const GameNets& nets, const Batch& batch, const LossWeights& w,
                            Variant variant) {
    return total_loss(nets, batch, batch, w, variant);
}

}  // namespace rcgan
