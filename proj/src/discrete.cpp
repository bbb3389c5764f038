#include "rcgan/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rcgan {

namespace {

void check_same_shape(int ax, int ay, int bx, int by, const char* what) {
    if (ax != bx || ay != by) {
        throw std::invalid_argument(std::string(what) + ": support mismatch (" +
                                    std::to_string(ax) + "x" + std::to_string(ay) + " vs " +
                                    std::to_string(bx) + "x" + std::to_string(by) + ")");
    }
}

double xlogy(double x, double y) {
    return x > 0.0 ? x * std::log(y) : 0.0;
}

}  // namespace

DiscreteJoint::DiscreteJoint(int support_x, int support_y, std::vector<double> probs)
    : nx_(support_x), ny_(support_y), p_(std::move(probs)) {
    if (nx_ <= 0 || ny_ <= 0) {
        throw std::invalid_argument("DiscreteJoint: support dimensions must be positive");
    }
    if (p_.size() != static_cast<size_t>(nx_) * ny_) {
        throw std::invalid_argument("DiscreteJoint: table size " + std::to_string(p_.size()) +
                                    " does not match " + std::to_string(nx_) + "x" +
                                    std::to_string(ny_));
    }
    double sum = 0.0;
    for (int x = 0; x < nx_; ++x) {
        for (int y = 0; y < ny_; ++y) {
            double v = at(x, y);
            if (!(v >= 0.0)) {
                throw std::invalid_argument("DiscreteJoint: negative entry at (" +
                                            std::to_string(x) + "," + std::to_string(y) + ")");
            }
            sum += v;
        }
    }
    if (std::abs(sum - 1.0) > kSumTol) {
        throw std::invalid_argument("DiscreteJoint: entries sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-12");
    }
}

DiscreteJoint DiscreteJoint::uniform(int support_x, int support_y) {
    size_t n = static_cast<size_t>(support_x) * support_y;
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    return DiscreteJoint(support_x, support_y, std::move(p));
}

DiscreteJoint DiscreteJoint::delta(int support_x, int support_y, int x, int y) {
    std::vector<double> p(static_cast<size_t>(support_x) * support_y, 0.0);
    p[static_cast<size_t>(x) * support_y + y] = 1.0;
    return DiscreteJoint(support_x, support_y, std::move(p));
}

DiscreteJoint DiscreteJoint::random(int support_x, int support_y, Rng& rng) {
    size_t n = static_cast<size_t>(support_x) * support_y;
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
        v = -std::log(1.0 - rng.uniform());  // Exp(1), strictly positive
        sum += v;
    }
    for (auto& v : p) v /= sum;
    // Renormalize once more in compensated order so the ctor's 1e-12 gate holds.
    double s2 = 0.0;
    for (double v : p) s2 += v;
    for (auto& v : p) v /= s2;
    return DiscreteJoint(support_x, support_y, std::move(p));
}

std::vector<double> DiscreteJoint::marginal_x() const {
    std::vector<double> m(nx_, 0.0);
    for (int x = 0; x < nx_; ++x) {
        for (int y = 0; y < ny_; ++y) m[x] += at(x, y);
    }
    return m;
}

std::vector<double> DiscreteJoint::conditional_y_given_x() const {
    std::vector<double> cond(p_.size(), -1.0);
    auto m = marginal_x();
    for (int x = 0; x < nx_; ++x) {
        if (m[x] <= 0.0) continue;
        for (int y = 0; y < ny_; ++y) {
            cond[static_cast<size_t>(x) * ny_ + y] = at(x, y) / m[x];
        }
    }
    return cond;
}

DiscreteJoint DiscreteJoint::perturbed(double tv_target, Rng& rng) const {
    std::vector<double> d(p_.size());
    double mean = 0.0;
    for (auto& v : d) {
        v = rng.uniform(-1.0, 1.0);
        mean += v;
    }
    mean /= static_cast<double>(d.size());
    double abs_sum = 0.0;
    for (auto& v : d) {
        v -= mean;
        abs_sum += std::abs(v);
    }
    if (abs_sum == 0.0) return *this;
    double scale = 2.0 * tv_target / abs_sum;
    std::vector<double> q(p_.size());
    double floor = 1e-9;
    for (size_t i = 0; i < q.size(); ++i) {
        q[i] = std::max(p_[i] + scale * d[i], floor);
    }
    double sum = 0.0;
    for (double v : q) sum += v;
    for (auto& v : q) v /= sum;
    double s2 = 0.0;
    for (double v : q) s2 += v;
    for (auto& v : q) v /= s2;
    return DiscreteJoint(nx_, ny_, std::move(q));
}

double DiscreteJoint::total_variation(const DiscreteJoint& other) const {
    check_same_shape(nx_, ny_, other.nx_, other.ny_, "total_variation");
    double s = 0.0;
    for (size_t i = 0; i < p_.size(); ++i) s += std::abs(p_[i] - other.p_[i]);
    return 0.5 * s;
}

nlohmann::json DiscreteJoint::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int x = 0; x < nx_; ++x) {
        nlohmann::json row = nlohmann::json::array();
        for (int y = 0; y < ny_; ++y) row.push_back(at(x, y));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"support_x", nx_}, {"support_y", ny_}, {"probs", std::move(rows)}};
}

DiscreteJoint DiscreteJoint::from_json(const nlohmann::json& j) {
    int nx = j.at("support_x").get<int>();
    int ny = j.at("support_y").get<int>();
    std::vector<double> p;
    p.reserve(static_cast<size_t>(nx) * ny);
    for (const auto& row : j.at("probs")) {
        for (const auto& v : row) p.push_back(v.get<double>());
    }
    return DiscreteJoint(nx, ny, std::move(p));
}

DiscriminatorTable DiscriminatorTable::constant(int support_x, int support_y, double value) {
    DiscriminatorTable t;
    t.support_x = support_x;
    t.support_y = support_y;
    t.values.assign(static_cast<size_t>(support_x) * support_y, value);
    return t;
}

MixtureSpec::MixtureSpec(double a) : alpha(a) {
    if (!(a >= 0.0 && a <= 1.0)) {
        throw std::invalid_argument("MixtureSpec: alpha must lie in [0,1], got " +
                                    std::to_string(a));
    }
}

DiscreteJoint mix(const DiscreteJoint& p_g, const DiscreteJoint& p_c, const MixtureSpec& spec) {
    check_same_shape(p_g.support_x(), p_g.support_y(), p_c.support_x(), p_c.support_y(), "mix");
    std::vector<double> p(p_g.probs().size());
    for (size_t i = 0; i < p.size(); ++i) {
        p[i] = spec.alpha * p_g.probs()[i] + (1.0 - spec.alpha) * p_c.probs()[i];
    }
    return DiscreteJoint(p_g.support_x(), p_g.support_y(), std::move(p));
}

DiscriminatorTable optimal_discriminator(const DiscreteJoint& p_t, const DiscreteJoint& p_m) {
    check_same_shape(p_t.support_x(), p_t.support_y(), p_m.support_x(), p_m.support_y(),
                     "optimal_discriminator");
    DiscriminatorTable d;
    d.support_x = p_t.support_x();
    d.support_y = p_t.support_y();
    d.values.resize(p_t.probs().size());
    for (size_t i = 0; i < d.values.size(); ++i) {
        double a = p_t.probs()[i], b = p_m.probs()[i];
        double v = (a + b > 0.0) ? a / (a + b) : 0.5;
        d.values[i] = std::clamp(v, DiscriminatorTable::kClamp, 1.0 - DiscriminatorTable::kClamp);
    }
    return d;
}

double gan_value(const DiscreteJoint& p_t, const DiscreteJoint& p_m, const DiscriminatorTable& d) {
    check_same_shape(p_t.support_x(), p_t.support_y(), p_m.support_x(), p_m.support_y(),
                     "gan_value");
    check_same_shape(p_t.support_x(), p_t.support_y(), d.support_x, d.support_y, "gan_value");
    double v = 0.0;
    for (size_t i = 0; i < p_t.probs().size(); ++i) {
        double di = std::clamp(d.values[i], DiscriminatorTable::kClamp,
                               1.0 - DiscriminatorTable::kClamp);
        v += xlogy(p_t.probs()[i], di) + xlogy(p_m.probs()[i], 1.0 - di);
    }
    return v;
}

double kl(const DiscreteJoint& p, const DiscreteJoint& q) {
    check_same_shape(p.support_x(), p.support_y(), q.support_x(), q.support_y(), "kl");
    double v = 0.0;
    for (size_t i = 0; i < p.probs().size(); ++i) {
        double a = p.probs()[i], b = q.probs()[i];
        if (a == 0.0) continue;
        if (b == 0.0) return std::numeric_limits<double>::infinity();
        v += a * std::log(a / b);
    }
    return v;
}

double jsd(const DiscreteJoint& p, const DiscreteJoint& q) {
    check_same_shape(p.support_x(), p.support_y(), q.support_x(), q.support_y(), "jsd");
    double v = 0.0;
    for (size_t i = 0; i < p.probs().size(); ++i) {
        double a = p.probs()[i], b = q.probs()[i];
        double m = 0.5 * (a + b);
        if (m == 0.0) continue;
        v += 0.5 * xlogy(a, a / m) + 0.5 * xlogy(b, b / m);
    }
    return v;
}

ClassifierLossParts classifier_loss_exact(const DiscreteJoint& p_t,
                                          const DiscreteJoint& p_c_joint) {
    check_same_shape(p_t.support_x(), p_t.support_y(), p_c_joint.support_x(),
                     p_c_joint.support_y(), "classifier_loss_exact");
    auto mt = p_t.marginal_x();
    auto mc = p_c_joint.marginal_x();
    for (int x = 0; x < p_t.support_x(); ++x) {
        if (std::abs(mt[x] - mc[x]) > 1e-9) {
            throw std::invalid_argument(
                "classifier_loss_exact: x-marginal mismatch at atom " + std::to_string(x) +
                " (" + std::to_string(mt[x]) + " vs " + std::to_string(mc[x]) + ")");
        }
    }
    ClassifierLossParts out;
    int ny = p_t.support_y();
    for (int x = 0; x < p_t.support_x(); ++x) {
        if (mt[x] <= 0.0) continue;
        for (int y = 0; y < ny; ++y) {
            double pt = p_t.at(x, y);
            if (pt == 0.0) continue;
            double cond_c = p_c_joint.at(x, y) / mc[x];
            out.total += cond_c > 0.0 ? -pt * std::log(cond_c)
                                      : std::numeric_limits<double>::infinity();
            out.entropy_part -= pt * std::log(pt / mt[x]);
        }
    }
    out.kl_part = kl(p_t, p_c_joint);
    return out;
}

EquilibriumReport equilibrium_check(const DiscreteJoint& p_t, const DiscreteJoint& p_g,
                                    const DiscreteJoint& p_c, const MixtureSpec& spec,
                                    double tol) {
    EquilibriumReport r;
    DiscreteJoint p_m = mix(p_g, p_c, spec);
    r.jsd_t_m = jsd(p_t, p_m);
    r.kl_t_c = kl(p_t, p_c);
    r.is_equilibrium = r.jsd_t_m <= tol && r.kl_t_c <= tol;
    r.jsd_t_g = jsd(p_t, p_g);
    r.jsd_t_g_bound = std::numeric_limits<double>::infinity();
    if (r.is_equilibrium && spec.alpha > 0.0 && spec.alpha < 1.0) {
        // p_m = p_t and p_c = p_t force p_g = p_t. Quantitatively:
        // alpha*TV(t,g) <= TV(t,m) + (1-alpha)*TV(t,c), with TV(t,m) bounded via
        // jsd (TV <= sqrt(2*jsd)) and TV(t,c) via Pinsker (TV <= sqrt(kl/2)),
        // and jsd itself bounded by log(2)*TV.
        double tv_bound = (std::sqrt(2.0 * std::max(r.jsd_t_m, 0.0)) +
                           (1.0 - spec.alpha) * std::sqrt(0.5 * std::max(r.kl_t_c, 0.0))) /
                          spec.alpha;
        r.jsd_t_g_bound = std::log(2.0) * std::min(1.0, tv_bound);
        if (r.jsd_t_g > r.jsd_t_g_bound) r.is_equilibrium = false;
    }
    return r;
}

double augmented_objective(const DiscreteJoint& p_t, const DiscreteJoint& p_g,
                           const DiscreteJoint& p_c, const MixtureSpec& spec, double weight) {
    if (weight < 0.0) {
        throw std::invalid_argument("augmented_objective: divergence weight must be >= 0, got " +
                                    std::to_string(weight));
    }
    DiscreteJoint p_m = mix(p_g, p_c, spec);
    double base = gan_value(p_t, p_m, optimal_discriminator(p_t, p_m));
    if (weight == 0.0) return base;
    return base + weight * (kl(p_t, p_g) + kl(p_t, p_c) + kl(p_g, p_c));
}

bool corollary_check(const DiscreteJoint& p_t, const DiscreteJoint& p_g, const DiscreteJoint& p_c,
                     const MixtureSpec& spec, double extra_divergence_weight) {
    if (extra_divergence_weight < 0.0) {
        throw std::invalid_argument("corollary_check: divergence weight must be >= 0, got " +
                                    std::to_string(extra_divergence_weight));
    }
    auto eq = equilibrium_check(p_t, p_g, p_c, spec);
    if (!eq.is_equilibrium) return false;
    double base = gan_value(p_t, mix(p_g, p_c, spec),
                            optimal_discriminator(p_t, mix(p_g, p_c, spec)));
    double aug = augmented_objective(p_t, p_g, p_c, spec, extra_divergence_weight);
    if (std::abs(aug - base) > 1e-12) return false;
    Rng rng(0x5eedc0de);
    for (int i = 0; i < 100; ++i) {
        DiscreteJoint qt = p_t.perturbed(0.02, rng);
        DiscreteJoint qg = p_g.perturbed(0.02, rng);
        DiscreteJoint qc = p_c.perturbed(0.02, rng);
        if (!(augmented_objective(qt, qg, qc, spec, extra_divergence_weight) > aug)) {
            return false;
        }
    }
    return true;
}

}  // namespace rcgan
