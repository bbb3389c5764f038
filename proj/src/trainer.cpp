#include "rcgan/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rcgan/rng.hpp"

namespace fs = std::filesystem;

namespace rcgan {

std::string opt_name(OptKind k) { return k == OptKind::adam ? "adam" : "sgd"; }

OptKind opt_from_name(const std::string& s) {
    if (s == "adam") return OptKind::adam;
    if (s == "sgd") return OptKind::sgd;
    throw std::invalid_argument("unknown optimizer: " + s);
}

std::string label_mode_name(LabelMode m) {
    switch (m) {
        case LabelMode::correct: return "correct";
        case LabelMode::random_labels: return "random";
        case LabelMode::shifted: return "shifted";
    }
    return "correct";
}

LabelMode label_mode_from_name(const std::string& s) {
    if (s == "correct") return LabelMode::correct;
    if (s == "random") return LabelMode::random_labels;
    if (s == "shifted") return LabelMode::shifted;
    throw std::invalid_argument("unknown label mode: " + s);
}

void TrainConfig::validate() const {
    if (steps <= 0) throw std::invalid_argument("TrainConfig: steps must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(optimizer.learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    }
    if (d_steps_per_g_step < 1) {
        throw std::invalid_argument("TrainConfig: d_steps_per_g_step must be >= 1");
    }
    if (snapshot_every < 1) throw std::invalid_argument("TrainConfig: snapshot_every must be >= 1");
    if (net_hidden.empty()) throw std::invalid_argument("TrainConfig: net_hidden must be nonempty");
    weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
    return nlohmann::json{
        {"variant", variant_name(variant)},
        {"steps", steps},
        {"batch_size", batch_size},
        {"optimizer",
         {{"kind", opt_name(optimizer.kind)},
          {"learning_rate", optimizer.learning_rate},
          {"beta1", optimizer.beta1},
          {"beta2", optimizer.beta2},
          {"eps", optimizer.eps}}},
        {"d_steps_per_g_step", d_steps_per_g_step},
        {"snapshot_every", snapshot_every},
        {"weights", weights.to_json()},
        {"seed", seed},
        {"net_hidden", net_hidden},
        {"spectral_norm", spectral_norm},
        {"source_label_mode", label_mode_name(source_label_mode)},
        {"g_warmup_steps", g_warmup_steps}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    if (j.contains("steps")) c.steps = j.at("steps").get<int>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        if (o.contains("kind")) c.optimizer.kind = opt_from_name(o.at("kind").get<std::string>());
        if (o.contains("learning_rate")) c.optimizer.learning_rate = o.at("learning_rate").get<double>();
        if (o.contains("beta1")) c.optimizer.beta1 = o.at("beta1").get<double>();
        if (o.contains("beta2")) c.optimizer.beta2 = o.at("beta2").get<double>();
        if (o.contains("eps")) c.optimizer.eps = o.at("eps").get<double>();
    }
    if (j.contains("d_steps_per_g_step")) c.d_steps_per_g_step = j.at("d_steps_per_g_step").get<int>();
    if (j.contains("snapshot_every")) c.snapshot_every = j.at("snapshot_every").get<int>();
    if (j.contains("weights")) c.weights = LossWeights::from_json(j.at("weights"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("net_hidden")) c.net_hidden = j.at("net_hidden").get<std::vector<int>>();
    if (j.contains("spectral_norm")) c.spectral_norm = j.at("spectral_norm").get<bool>();
    if (j.contains("source_label_mode")) {
        c.source_label_mode = label_mode_from_name(j.at("source_label_mode").get<std::string>());
    }
    if (j.contains("g_warmup_steps")) c.g_warmup_steps = j.at("g_warmup_steps").get<int>();
    c.validate();
    return c;
}

const std::vector<std::string>& game_net_names() {
    static const std::vector<std::string> n = {"g_st", "g_ts", "d_t", "d_s", "c"};
    return n;
}

GameNets make_nets(int k, int feature_dim, const TrainConfig& cfg, Rng& rng) {
    auto dims_of = [&](int in, int out) {
        std::vector<int> d = {in};
        d.insert(d.end(), cfg.net_hidden.begin(), cfg.net_hidden.end());
        d.push_back(out);
        return d;
    };
    auto acts_of = [&](size_t n_layers, Act hidden, Act out) {
        std::vector<Act> a(n_layers, hidden);
        a.back() = out;
        return a;
    };
    size_t nl = cfg.net_hidden.size() + 1;
    std::vector<std::uint8_t> plain(nl, 0);
    std::vector<std::uint8_t> sn(nl, cfg.spectral_norm ? 1 : 0);
    int gen_in = cfg.variant == Variant::relaxed ? feature_dim : feature_dim + k;
    GameNets nets;
    nets.g_st = Mlp::make(dims_of(gen_in, feature_dim), acts_of(nl, Act::relu, Act::identity),
                          plain, rng);
    nets.g_ts = Mlp::make(dims_of(gen_in, feature_dim), acts_of(nl, Act::relu, Act::identity),
                          plain, rng);
    nets.d_t = Mlp::make(dims_of(feature_dim + k + 1, 1), acts_of(nl, Act::relu, Act::sigmoid),
                         sn, rng);
    nets.d_s = Mlp::make(dims_of(feature_dim, 1), acts_of(nl, Act::relu, Act::sigmoid), sn, rng);
    nets.c = Mlp::make(dims_of(feature_dim, k), acts_of(nl, Act::relu, Act::softmax), plain, rng);
    return nets;
}

void Optimizer::step(Vec& params, const Vec& grad, double direction) {
    if (m.empty()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    if (cfg.kind == OptKind::sgd) {
        for (size_t i = 0; i < params.size(); ++i) {
            params[i] += direction * cfg.learning_rate * grad[i];
        }
        return;
    }
    ++t;
    double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        double mhat = m[i] / c1;
        double vhat = v[i] / c2;
        params[i] += direction * cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

double evaluate_accuracy(const Mlp& c, const std::vector<LabeledPoint>& points) {
    if (points.empty()) throw std::invalid_argument("evaluate_accuracy: empty point list");
    int hits = 0;
    for (const auto& p : points) {
        if (argmax(c.forward(p.x)) == p.y) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(points.size());
}

namespace {

struct BatchSampler {
    const SsdaDataset& ds;
    const TrainConfig& cfg;
    Rng& rng;

    int corrupted_label(int y) {
        switch (cfg.source_label_mode) {
            case LabelMode::correct: return y;
            case LabelMode::random_labels: return rng.uniform_int(ds.k);
            case LabelMode::shifted: return (y + 1) % ds.k;
        }
        return y;
    }

    Batch sample() {
        Batch b;
        for (int i = 0; i < cfg.batch_size && !ds.source.empty(); ++i) {
            const auto& p = ds.source[rng.uniform_int(static_cast<int>(ds.source.size()))];
            b.source_xy.push_back({p.x, corrupted_label(p.y)});
        }
        for (int i = 0; i < cfg.batch_size && !ds.target_labeled.empty(); ++i) {
            const auto& p =
                ds.target_labeled[rng.uniform_int(static_cast<int>(ds.target_labeled.size()))];
            b.target_xy.push_back(p);
        }
        for (int i = 0; i < cfg.batch_size && !ds.target_unlabeled.empty(); ++i) {
            const auto& p =
                ds.target_unlabeled[rng.uniform_int(static_cast<int>(ds.target_unlabeled.size()))];
            b.target_unlabeled.push_back(p.x);
        }
        return b;
    }

    // Fresh unlabeled subsample of half batch size for the pseudo-label term.
    Batch sample_pseudo() {
        Batch b;
        int n = std::max(1, cfg.batch_size / 2);
        for (int i = 0; i < n && !ds.target_unlabeled.empty(); ++i) {
            const auto& p =
                ds.target_unlabeled[rng.uniform_int(static_cast<int>(ds.target_unlabeled.size()))];
            b.target_unlabeled.push_back(p.x);
        }
        return b;
    }
};

void check_finite(double value, int step, const char* player) {
    if (!std::isfinite(value)) {
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(step) +
                                 " for player " + player);
    }
}

Snapshot take_snapshot(int step, const GameNets& nets) {
    return Snapshot{step,         nets.g_st.flatten(), nets.g_ts.flatten(),
                    nets.d_t.flatten(), nets.d_s.flatten(),  nets.c.flatten()};
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

TrainResult train(const SsdaDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    Rng net_rng = rng.fork(1);
    Rng batch_rng = rng.fork(2);
    Rng eval_rng = rng.fork(3);

    int feat = 2;
    GameNets nets = make_nets(ds.k, feat, cfg, net_rng);
    nets.validate(cfg.variant);

    // Fixed evaluation subset for the per-step accuracy curve (the exact
    // final accuracy is computed by callers on the full set).
    std::vector<LabeledPoint> eval_points;
    {
        const auto& pool = ds.target_unlabeled.empty() ? ds.target_labeled : ds.target_unlabeled;
        std::vector<int> idx(pool.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
            std::swap(idx[i], idx[eval_rng.uniform_int(i + 1)]);
        }
        size_t n = std::min<size_t>(idx.size(), 400);
        for (size_t i = 0; i < n; ++i) eval_points.push_back(pool[idx[i]]);
    }

    Optimizer opt_gst(cfg.optimizer), opt_gts(cfg.optimizer), opt_dt(cfg.optimizer),
        opt_ds(cfg.optimizer), opt_c(cfg.optimizer);

    // Unlabeled-data regularizers are vacuous without an unlabeled pool.
    LossWeights weights = cfg.weights;
    if (ds.target_unlabeled.empty()) {
        weights.lambda_pseudo = 0.0;
        weights.lambda_ent = 0.0;
    }

    TrainResult result;
    result.seed = cfg.seed;
    result.config = cfg;
    result.snapshots.push_back(take_snapshot(0, nets));

    BatchSampler sampler{ds, cfg, batch_rng};

    for (int step = 1; step <= cfg.steps; ++step) {
        double last_for_d = 0.0;
        for (int sub = 0; sub < cfg.d_steps_per_g_step; ++sub) {
            Batch batch = sampler.sample();
            Batch pseudo = cfg.variant == Variant::relaxed && weights.lambda_pseudo > 0.0
                               ? sampler.sample_pseudo()
                               : Batch{};
            ad::Tape t;
            MlpGrads gdt(nets.d_t), gds(nets.d_s);
            ad::Value v = for_d_node(t, nets, batch, pseudo, weights, cfg.variant, &gdt, &gds);
            last_for_d = t.scalar(v);
            check_finite(last_for_d, step, "d");
            t.backward(v);
            ParamVector p_dt = nets.d_t.flatten();
            opt_dt.step(p_dt.values, gdt.to_param_vector(nets.d_t.layout()).values, +1.0);
            nets.d_t.load_params(p_dt);
            nets.d_t.spectral_step();
            ParamVector p_ds = nets.d_s.flatten();
            opt_ds.step(p_ds.values, gds.to_param_vector(nets.d_s.layout()).values, +1.0);
            nets.d_s.load_params(p_ds);
            nets.d_s.spectral_step();
        }

        Batch batch = sampler.sample();
        double for_g_val = 0.0;
        // Generators sit out the warm-up steps (recorded as 0 in the curve).
        if (step > cfg.g_warmup_steps) {
            ad::Tape t;
            MlpGrads ggst(nets.g_st), ggts(nets.g_ts);
            ad::Value v = for_g_node(t, nets, batch, weights, cfg.variant, &ggst, &ggts);
            for_g_val = t.scalar(v);
            check_finite(for_g_val, step, "g");
            t.backward(v);
            ParamVector p1 = nets.g_st.flatten();
            opt_gst.step(p1.values, ggst.to_param_vector(nets.g_st.layout()).values, -1.0);
            nets.g_st.load_params(p1);
            ParamVector p2 = nets.g_ts.flatten();
            opt_gts.step(p2.values, ggts.to_param_vector(nets.g_ts.layout()).values, -1.0);
            nets.g_ts.load_params(p2);
        }

        // The classifier shares the generator step's batch. It is trained in
        // both variants; only the relaxed variant adds the entropy and
        // adversarial terms.
        double for_c_val = 0.0;
        {
            ad::Tape t;
            MlpGrads gc(nets.c);
            ad::Value v = for_c_node(t, nets, batch, weights, cfg.variant, &gc);
            for_c_val = t.scalar(v);
            check_finite(for_c_val, step, "c");
            t.backward(v);
            ParamVector p = nets.c.flatten();
            opt_c.step(p.values, gc.to_param_vector(nets.c.layout()).values, -1.0);
            nets.c.load_params(p);
        }

        result.for_d_curve.push_back(last_for_d);
        result.for_g_curve.push_back(for_g_val);
        result.for_c_curve.push_back(for_c_val);
        result.target_acc_curve.push_back(
            eval_points.empty() ? 0.0 : evaluate_accuracy(nets.c, eval_points));

        if (step == cfg.steps || step % cfg.snapshot_every == 0) {
            result.snapshots.push_back(take_snapshot(step, nets));
        }
    }

    result.final_nets = nets;
    return result;
}

void save_train_result(const TrainResult& r, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "nets");
    const GameNets& n = r.final_nets;
    const Mlp* nets[] = {&n.g_st, &n.g_ts, &n.d_t, &n.d_s, &n.c};
    for (size_t i = 0; i < game_net_names().size(); ++i) {
        std::ofstream out(fs::path(dir) / "nets" / (game_net_names()[i] + ".json"));
        out << nets[i]->to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "curves.csv");
        out << "step,for_d,for_g,for_c,target_acc\n";
        for (size_t i = 0; i < r.for_d_curve.size(); ++i) {
            out << (i + 1) << "," << fmt_double(r.for_d_curve[i]) << ","
                << fmt_double(r.for_g_curve[i]) << "," << fmt_double(r.for_c_curve[i]) << ","
                << fmt_double(r.target_acc_curve[i]) << "\n";
        }
    }
    {
        nlohmann::json layout;
        layout["nets"] = game_net_names();
        nlohmann::json layouts;
        auto layout_json = [](const ParamVector& pv) {
            nlohmann::json lj;
            lj["dims"] = pv.layout.dims;
            nlohmann::json acts = nlohmann::json::array();
            for (Act a : pv.layout.acts) acts.push_back(act_name(a));
            lj["activations"] = std::move(acts);
            nlohmann::json sp = nlohmann::json::array();
            for (auto s : pv.layout.spectral) sp.push_back(s != 0);
            lj["spectral_norm"] = std::move(sp);
            lj["size"] = pv.values.size();
            return lj;
        };
        const Snapshot& s0 = r.snapshots.front();
        layouts["g_st"] = layout_json(s0.g_st);
        layouts["g_ts"] = layout_json(s0.g_ts);
        layouts["d_t"] = layout_json(s0.d_t);
        layouts["d_s"] = layout_json(s0.d_s);
        layouts["c"] = layout_json(s0.c);
        layout["layouts"] = std::move(layouts);
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : r.snapshots) steps.push_back(s.step);
        layout["snapshot_steps"] = std::move(steps);
        layout["seed"] = r.seed;
        std::ofstream out(fs::path(dir) / "snapshots_layout.json");
        out << layout.dump(2) << "\n";

        std::ofstream bin(fs::path(dir) / "snapshots.bin", std::ios::binary);
        for (const auto& s : r.snapshots) {
            const ParamVector* pvs[] = {&s.g_st, &s.g_ts, &s.d_t, &s.d_s, &s.c};
            for (const auto* pv : pvs) {
                bin.write(reinterpret_cast<const char*>(pv->values.data()),
                          static_cast<std::streamsize>(pv->values.size() * sizeof(double)));
            }
        }
    }
    {
        std::ofstream out(fs::path(dir) / "train_config.json");
        out << r.config.to_json().dump(2) << "\n";
    }
}

TrainResult load_train_result(const std::string& dir) {
    TrainResult r;
    {
        std::ifstream in(fs::path(dir) / "train_config.json");
        if (!in) throw std::runtime_error("load_train_result: missing train_config.json in " + dir);
        r.config = TrainConfig::from_json(nlohmann::json::parse(in));
        r.seed = r.config.seed;
    }
    Mlp* nets[] = {&r.final_nets.g_st, &r.final_nets.g_ts, &r.final_nets.d_t, &r.final_nets.d_s,
                   &r.final_nets.c};
    for (size_t i = 0; i < game_net_names().size(); ++i) {
        std::ifstream in(fs::path(dir) / "nets" / (game_net_names()[i] + ".json"));
        if (!in) throw std::runtime_error("load_train_result: missing net " + game_net_names()[i]);
        *nets[i] = Mlp::from_json(nlohmann::json::parse(in));
    }
    {
        std::ifstream lin(fs::path(dir) / "snapshots_layout.json");
        if (!lin) throw std::runtime_error("load_train_result: missing snapshots_layout.json");
        nlohmann::json layout = nlohmann::json::parse(lin);
        std::vector<ParamLayout> layouts;
        for (const auto& name : game_net_names()) {
            const auto& lj = layout.at("layouts").at(name);
            ParamLayout pl;
            pl.dims = lj.at("dims").get<std::vector<int>>();
            for (const auto& a : lj.at("activations")) pl.acts.push_back(act_from_name(a.get<std::string>()));
            for (const auto& s : lj.at("spectral_norm")) pl.spectral.push_back(s.get<bool>() ? 1 : 0);
            layouts.push_back(std::move(pl));
        }
        std::ifstream bin(fs::path(dir) / "snapshots.bin", std::ios::binary);
        for (const auto& sj : layout.at("snapshot_steps")) {
            Snapshot s;
            s.step = sj.get<int>();
            ParamVector* pvs[] = {&s.g_st, &s.g_ts, &s.d_t, &s.d_s, &s.c};
            for (size_t i = 0; i < layouts.size(); ++i) {
                pvs[i]->layout = layouts[i];
                pvs[i]->values.resize(layouts[i].total_params());
                bin.read(reinterpret_cast<char*>(pvs[i]->values.data()),
                         static_cast<std::streamsize>(pvs[i]->values.size() * sizeof(double)));
            }
            if (!bin) throw std::runtime_error("load_train_result: snapshots.bin truncated");
            r.snapshots.push_back(std::move(s));
        }
    }
    {
        std::ifstream in(fs::path(dir) / "curves.csv");
        if (in) {
            std::string line;
            std::getline(in, line);
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                double fd, fg, fc, acc;
                int step;
                if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf", &step, &fd, &fg, &fc, &acc) == 5) {
                    r.for_d_curve.push_back(fd);
                    r.for_g_curve.push_back(fg);
                    r.for_c_curve.push_back(fc);
                    r.target_acc_curve.push_back(acc);
                }
            }
        }
    }
    return r;
}

}  // namespace rcgan
