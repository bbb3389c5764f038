#pragma once

// Exact finite-support verifier for the three-player adversarial game:
// joint distributions over a grid of x-atoms and K classes, the optimal
// conditional discriminator, the game value, and the divergence identities
// that characterize its equilibrium.

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rcgan/rng.hpp"

namespace rcgan {

// Exact joint probability table over a finite support X x Y.
// Entries are nonnegative and sum to 1 within kSumTol.
class DiscreteJoint {
public:
    static constexpr double kSumTol = 1e-12;

    DiscreteJoint(int support_x, int support_y, std::vector<double> probs);

    static DiscreteJoint uniform(int support_x, int support_y);
    static DiscreteJoint delta(int support_x, int support_y, int x, int y);
    // Random distribution with strictly positive entries (normalized Exp(1) draws).
    static DiscreteJoint random(int support_x, int support_y, Rng& rng);

    int support_x() const { return nx_; }
    int support_y() const { return ny_; }
    double at(int x, int y) const { return p_[static_cast<size_t>(x) * ny_ + y]; }
    const std::vector<double>& probs() const { return p_; }

    std::vector<double> marginal_x() const;
    // p(y|x); rows where marginal_x == 0 are filled with -1 (undefined).
    std::vector<double> conditional_y_given_x() const;

    // Additive perturbation of total-variation distance ~tv_target that keeps
    // entries strictly positive (used by equilibrium / corollary tests).
    DiscreteJoint perturbed(double tv_target, Rng& rng) const;

    double total_variation(const DiscreteJoint& other) const;

    nlohmann::json to_json() const;
    static DiscreteJoint from_json(const nlohmann::json& j);

private:
    int nx_, ny_;
    std::vector<double> p_;  // row-major [x][y]
};

// Conditional discriminator as a table of values strictly inside (0, 1).
struct DiscriminatorTable {
    static constexpr double kClamp = 1e-12;

    int support_x = 0, support_y = 0;
    std::vector<double> values;  // row-major, every entry in (kClamp, 1-kClamp)

    static DiscriminatorTable constant(int support_x, int support_y, double value);
    double at(int x, int y) const { return values[static_cast<size_t>(x) * support_y + y]; }
};

// Mixing weight of the generator joint inside p_m = alpha*p_g + (1-alpha)*p_c.
struct MixtureSpec {
    double alpha = 0.5;

    explicit MixtureSpec(double a);
};

// p_m = alpha*p_g + (1-alpha)*p_c, entrywise.
DiscreteJoint mix(const DiscreteJoint& p_g, const DiscreteJoint& p_c, const MixtureSpec& spec);

// D*(x,y) = p_t / (p_t + p_m); both-zero entries are 0.5 by convention.
DiscriminatorTable optimal_discriminator(const DiscreteJoint& p_t, const DiscreteJoint& p_m);

// sum p_t*log d + p_m*log(1-d), natural log, d clamped away from {0,1}.
double gan_value(const DiscreteJoint& p_t, const DiscreteJoint& p_m, const DiscriminatorTable& d);

// KL(p||q) in nats with 0*log 0 := 0; +infinity when p has mass where q has none.
double kl(const DiscreteJoint& p, const DiscreteJoint& q);

// Jensen-Shannon divergence in nats; in [0, log 2].
double jsd(const DiscreteJoint& p, const DiscreteJoint& q);

struct ClassifierLossParts {
    double total = 0;         // E_{p_t}[-log p_c(y|x)]
    double kl_part = 0;       // KL(p_t || p_t(x)*p_c(y|x))
    double entropy_part = 0;  // E_{p_t(x)}[H[p_t(y|x)]], classifier-independent
};

// Splits the exact cross-entropy objective into its KL + conditional-entropy
// parts. p_c_joint must share p_t's x-marginal (tolerance 1e-9).
ClassifierLossParts classifier_loss_exact(const DiscreteJoint& p_t, const DiscreteJoint& p_c_joint);

struct EquilibriumReport {
    bool is_equilibrium = false;
    double jsd_t_m = 0;
    double kl_t_c = 0;
    // Checked only when is_equilibrium and 0 < alpha < 1: jsd(p_t, p_g) must
    // sit under a total-variation bound derived from jsd_t_m and kl_t_c.
    double jsd_t_g = 0;
    double jsd_t_g_bound = 0;
};

// Equilibrium iff jsd(p_t, mix(p_g, p_c)) <= tol and KL(p_t||p_c) <= tol.
EquilibriumReport equilibrium_check(const DiscreteJoint& p_t, const DiscreteJoint& p_g,
                                    const DiscreteJoint& p_c, const MixtureSpec& spec,
                                    double tol = 1e-9);

// Game value at the optimal discriminator plus weight * (KL(t||g) + KL(t||c) + KL(g||c)).
double augmented_objective(const DiscreteJoint& p_t, const DiscreteJoint& p_g,
                           const DiscreteJoint& p_c, const MixtureSpec& spec, double weight);

// True iff the given triple is the coincidence point, the added divergences
// vanish there (augmented == unaugmented within 1e-12), and seeded
// perturbations of the triple strictly increase the augmented objective.
bool corollary_check(const DiscreteJoint& p_t, const DiscreteJoint& p_g, const DiscreteJoint& p_c,
                     const MixtureSpec& spec, double extra_divergence_weight);

}  // namespace rcgan
