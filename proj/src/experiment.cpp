#include "rcgan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "rcgan/diagnostics.hpp"
#include "rcgan/discrete.hpp"
#include "rcgan/svg.hpp"

namespace fs = std::filesystem;

namespace rcgan {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
        }
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

void echo_config(const ExperimentConfig& cfg) {
    write_json((fs::path(cfg.out_dir) / "config.json").string(), cfg.to_json());
}

}  // namespace

nlohmann::json DiagnosticsConfig::to_json() const {
    return nlohmann::json{{"path_grid_min", path_grid_min},
                          {"path_grid_max", path_grid_max},
                          {"path_grid_points", path_grid_points},
                          {"eval_batch", eval_batch},
                          {"path_seed", path_seed},
                          {"n_probe", n_probe},
                          {"probe_seed", probe_seed},
                          {"transfer_n", transfer_n},
                          {"transfer_seed", transfer_seed},
                          {"oracle_steps", oracle_steps},
                          {"oracle_seed", oracle_seed}};
}

DiagnosticsConfig DiagnosticsConfig::from_json(const nlohmann::json& j) {
    check_keys(j,
               {"path_grid_min", "path_grid_max", "path_grid_points", "eval_batch", "path_seed",
                "n_probe", "probe_seed", "transfer_n", "transfer_seed", "oracle_steps",
                "oracle_seed"},
               "diagnostics");
    DiagnosticsConfig c;
    if (j.contains("path_grid_min")) c.path_grid_min = j.at("path_grid_min").get<double>();
    if (j.contains("path_grid_max")) c.path_grid_max = j.at("path_grid_max").get<double>();
    if (j.contains("path_grid_points")) c.path_grid_points = j.at("path_grid_points").get<int>();
    if (j.contains("eval_batch")) c.eval_batch = j.at("eval_batch").get<int>();
    if (j.contains("path_seed")) c.path_seed = j.at("path_seed").get<std::uint64_t>();
    if (j.contains("n_probe")) c.n_probe = j.at("n_probe").get<int>();
    if (j.contains("probe_seed")) c.probe_seed = j.at("probe_seed").get<std::uint64_t>();
    if (j.contains("transfer_n")) c.transfer_n = j.at("transfer_n").get<int>();
    if (j.contains("transfer_seed")) c.transfer_seed = j.at("transfer_seed").get<std::uint64_t>();
    if (j.contains("oracle_steps")) c.oracle_steps = j.at("oracle_steps").get<int>();
    if (j.contains("oracle_seed")) c.oracle_seed = j.at("oracle_seed").get<std::uint64_t>();
    return c;
}

nlohmann::json ExperimentConfig::to_json() const {
    return nlohmann::json{{"seed", seed},
                          {"out_dir", out_dir},
                          {"dataset", dataset.to_json()},
                          {"train", train.to_json()},
                          {"diagnostics", diagnostics.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    check_keys(j, {"seed", "out_dir", "dataset", "train", "diagnostics"}, "config root");
    ExperimentConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("dataset")) {
            check_keys(j.at("dataset"),
                       {"k", "n_source_per_class", "n_shot", "n_unlabeled_per_class",
                        "rotation_deg", "shift", "class_sep", "noise_sigma", "seed"},
                       "dataset");
            cfg.dataset = DatasetConfig::from_json(j.at("dataset"));
            if (!j.at("dataset").contains("seed")) cfg.dataset.seed = cfg.seed;
        } else {
            cfg.dataset.seed = cfg.seed;
        }
        if (j.contains("train")) {
            check_keys(j.at("train"),
                       {"variant", "steps", "batch_size", "optimizer", "d_steps_per_g_step",
                        "snapshot_every", "weights", "seed", "net_hidden", "spectral_norm",
                        "source_label_mode", "g_warmup_steps"},
                       "train");
            if (j.at("train").contains("optimizer")) {
                check_keys(j.at("train").at("optimizer"),
                           {"kind", "learning_rate", "beta1", "beta2", "eps"}, "train.optimizer");
            }
            if (j.at("train").contains("weights")) {
                check_keys(j.at("train").at("weights"),
                           {"lambda_gan", "lambda_cycle", "lambda_c", "lambda_marg",
                            "lambda_pseudo", "lambda_ent", "alpha"},
                           "train.weights");
            }
            cfg.train = TrainConfig::from_json(j.at("train"));
            if (!j.at("train").contains("seed")) cfg.train.seed = cfg.seed;
        } else {
            cfg.train.seed = cfg.seed;
        }
        if (j.contains("diagnostics")) {
            cfg.diagnostics = DiagnosticsConfig::from_json(j.at("diagnostics"));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

void ExperimentConfig::apply_seed(std::uint64_t s) {
    seed = s;
    dataset.seed = s;
    train.seed = s;
}

Mlp train_oracle_classifier(const SsdaDataset& ds, int steps, std::uint64_t seed) {
    std::vector<LabeledPoint> pool = ds.target_unlabeled;
    pool.insert(pool.end(), ds.target_labeled.begin(), ds.target_labeled.end());
    if (pool.empty()) throw ConfigError("oracle classifier: no target points to train on");
    Rng rng(seed);
    Mlp c = Mlp::make({2, 32, 32, ds.k}, {Act::relu, Act::relu, Act::softmax}, {0, 0, 0}, rng);
    OptimizerConfig oc;
    oc.learning_rate = 2e-3;
    oc.beta1 = 0.9;
    Optimizer opt(oc);
    int batch = 64;
    for (int step = 0; step < steps; ++step) {
        ad::Tape t;
        MlpGrads grads(c);
        ad::Value acc{};
        for (int i = 0; i < batch; ++i) {
            const auto& p = pool[rng.uniform_int(static_cast<int>(pool.size()))];
            ad::Value probs = c.apply(t, t.leaf(p.x), &grads);
            ad::Value nll = t.scale(t.log_clamp(t.pick(probs, p.y), kLossClamp), -1.0);
            acc = acc.valid() ? t.add(acc, nll) : nll;
        }
        ad::Value loss = t.scale(acc, 1.0 / batch);
        t.backward(loss);
        ParamVector pv = c.flatten();
        opt.step(pv.values, grads.to_param_vector(c.layout()).values, -1.0);
        c.load_params(pv);
    }
    return c;
}

int cmd_verify_equilibrium(int n_random, int support_x, int k, std::uint64_t seed,
                           const std::string& out_dir, bool quiet) {
    if (n_random < 1) throw ConfigError("verify-equilibrium: n_random must be >= 1");
    if (support_x < 1 || k < 1) throw ConfigError("verify-equilibrium: support dims must be >= 1");

    const double tol_identity = 1e-10;
    MixtureSpec alpha(0.5);
    Rng rng(seed);

    double max_value_dev = 0.0;
    double min_grid_margin = std::numeric_limits<double>::infinity();
    double max_lc_dev = 0.0;
    bool eq_true_on_coincident = true;
    bool eq_false_on_random = true;
    bool corollary_coincident = true;
    bool corollary_strict = true;

    for (int i = 0; i < n_random; ++i) {
        Rng r = rng.fork(static_cast<std::uint64_t>(i));
        DiscreteJoint p_t = DiscreteJoint::random(support_x, k, r);
        DiscreteJoint p_g = DiscreteJoint::random(support_x, k, r);
        DiscreteJoint p_c = DiscreteJoint::random(support_x, k, r);
        DiscreteJoint p_m = mix(p_g, p_c, alpha);

        // Lemma: value at the optimal discriminator equals -log4 + 2*JSD.
        DiscriminatorTable dstar = optimal_discriminator(p_t, p_m);
        double v = gan_value(p_t, p_m, dstar);
        max_value_dev = std::max(max_value_dev,
                                 std::abs(v - (-std::log(4.0) + 2.0 * jsd(p_t, p_m))));

        // The optimal table beats the best per-entry grid discriminator.
        DiscriminatorTable grid_best = dstar;
        for (size_t cell = 0; cell < grid_best.values.size(); ++cell) {
            double best_val = -std::numeric_limits<double>::infinity();
            double best_d = 0.5;
            for (int gi = 0; gi < 21; ++gi) {
                double d = 0.025 + gi * (0.95 / 20.0);
                double pt = p_t.probs()[cell], pm = p_m.probs()[cell];
                double val = (pt > 0 ? pt * std::log(d) : 0.0) +
                             (pm > 0 ? pm * std::log(1.0 - d) : 0.0);
                if (val > best_val) {
                    best_val = val;
                    best_d = d;
                }
            }
            grid_best.values[cell] = best_d;
        }
        min_grid_margin = std::min(min_grid_margin, v - gan_value(p_t, p_m, grid_best));

        // Cross-entropy decomposition against a random conditional sharing
        // p_t's x-marginal.
        DiscreteJoint raw = DiscreteJoint::random(support_x, k, r);
        auto cond = raw.conditional_y_given_x();
        auto marg = p_t.marginal_x();
        std::vector<double> joint(static_cast<size_t>(support_x) * k, 0.0);
        for (int x = 0; x < support_x; ++x) {
            for (int y = 0; y < k; ++y) {
                joint[static_cast<size_t>(x) * k + y] = marg[x] * cond[static_cast<size_t>(x) * k + y];
            }
        }
        double jsum = 0.0;
        for (double e : joint) jsum += e;
        for (auto& e : joint) e /= jsum;
        DiscreteJoint p_cc(support_x, k, std::move(joint));
        auto parts = classifier_loss_exact(p_t, p_cc);
        max_lc_dev = std::max(max_lc_dev,
                              std::abs(parts.total - (parts.kl_part + parts.entropy_part)));

        // Theorem: equilibrium exactly on coincident triples.
        if (!equilibrium_check(p_t, p_t, p_t, alpha).is_equilibrium) eq_true_on_coincident = false;
        if (p_t.total_variation(p_g) > 1e-3 || p_t.total_variation(p_c) > 1e-3) {
            if (equilibrium_check(p_t, p_g, p_c, alpha).is_equilibrium) eq_false_on_random = false;
        }

        // Corollary: added divergences keep the equilibrium point.
        if (!corollary_check(p_t, p_t, p_t, alpha, 1.0)) corollary_coincident = false;
        double base = augmented_objective(p_t, p_t, p_t, alpha, 1.0);
        DiscreteJoint q_g = p_t.perturbed(0.05, r);
        DiscreteJoint q_c = p_t.perturbed(0.05, r);
        if (!(augmented_objective(p_t, q_g, q_c, alpha, 1.0) > base)) corollary_strict = false;
    }

    bool pass = max_value_dev < tol_identity && max_lc_dev < tol_identity &&
                min_grid_margin > 0.0 && eq_true_on_coincident && eq_false_on_random &&
                corollary_coincident && corollary_strict;

    nlohmann::json report{{"n_random", n_random},
                          {"support_x", support_x},
                          {"k", k},
                          {"seed", seed},
                          {"alpha", alpha.alpha},
                          {"max_abs_dev_value_identity", max_value_dev},
                          {"min_grid_margin", min_grid_margin},
                          {"max_abs_dev_lc_decomposition", max_lc_dev},
                          {"equilibrium_true_on_coincident", eq_true_on_coincident},
                          {"equilibrium_false_on_random", eq_false_on_random},
                          {"corollary_true_on_coincident", corollary_coincident},
                          {"corollary_strict_increase", corollary_strict},
                          {"tolerance", tol_identity},
                          {"pass", pass}};
    if (!out_dir.empty()) {
        write_json((fs::path(out_dir) / "equilibrium_report.json").string(), report);
    }
    if (!quiet) {
        std::cout << "verify-equilibrium: " << (pass ? "PASS" : "FAIL")
                  << "  max|V - (-log4 + 2 JSD)| = " << max_value_dev
                  << "  min grid margin = " << min_grid_margin
                  << "  max|L_C - (KL + H)| = " << max_lc_dev << "\n";
    }
    return pass ? 0 : 1;
}

int cmd_make_data(const ExperimentConfig& cfg, bool quiet) {
    SsdaDataset ds = make_dataset(cfg.dataset);
    fs::create_directories(cfg.out_dir);
    save_dataset_csv(ds, (fs::path(cfg.out_dir) / "dataset.csv").string(),
                     (fs::path(cfg.out_dir) / "dataset_meta.json").string());
    echo_config(cfg);
    if (!quiet) {
        std::cout << "make-data: wrote " << ds.source.size() << " source, "
                  << ds.target_labeled.size() << " labeled target, "
                  << ds.target_unlabeled.size() << " unlabeled target points to "
                  << cfg.out_dir << "\n";
    }
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, bool quiet) {
    SsdaDataset ds = make_dataset(cfg.dataset);
    TrainResult result = train(ds, cfg.train);
    save_train_result(result, cfg.out_dir);
    echo_config(cfg);
    double acc = ds.target_unlabeled.empty()
                     ? evaluate_accuracy(result.final_nets.c, ds.target_labeled)
                     : evaluate_accuracy(result.final_nets.c, ds.target_unlabeled);
    write_json((fs::path(cfg.out_dir) / "final_metrics.json").string(),
               nlohmann::json{{"target_accuracy", acc},
                              {"steps", cfg.train.steps},
                              {"variant", variant_name(cfg.train.variant)}});
    if (!quiet) {
        std::cout << "train: " << variant_name(cfg.train.variant) << " for " << cfg.train.steps
                  << " steps, target accuracy " << acc << ", results in " << cfg.out_dir << "\n";
    }
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet) {
    TrainResult result = load_train_result(result_dir);
    SsdaDataset ds = make_dataset(cfg.dataset);
    nlohmann::json out;
    out["source_accuracy"] = evaluate_accuracy(result.final_nets.c, ds.source);
    out["target_labeled_accuracy"] = evaluate_accuracy(result.final_nets.c, ds.target_labeled);
    if (!ds.target_unlabeled.empty()) {
        out["target_unlabeled_accuracy"] =
            evaluate_accuracy(result.final_nets.c, ds.target_unlabeled);
    }
    fs::create_directories(cfg.out_dir);
    write_json((fs::path(cfg.out_dir) / "eval.json").string(), out);
    echo_config(cfg);
    if (!quiet) std::cout << "eval: " << out.dump() << "\n";
    return 0;
}

int cmd_path_angle(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet) {
    TrainResult result = load_train_result(result_dir);
    SsdaDataset ds = make_dataset(cfg.dataset);
    auto grid = uniform_grid(cfg.diagnostics.path_grid_min, cfg.diagnostics.path_grid_max,
                             cfg.diagnostics.path_grid_points);
    PathAngleTrace trace = path_angle(result, ds, result.config.weights, result.config.variant,
                                      grid, cfg.diagnostics.eval_batch, cfg.diagnostics.path_seed);
    fs::create_directories(cfg.out_dir);
    {
        std::string csv = "t,cosine,grad_norm\n";
        for (size_t i = 0; i < trace.ts.size(); ++i) {
            csv += fmt_double(trace.ts[i]) + "," + fmt_double(trace.cosines[i]) + "," +
                   fmt_double(trace.grad_norms[i]) + "\n";
        }
        write_text((fs::path(cfg.out_dir) / "path_angle.csv").string(), csv);
    }
    {
        svg::Panel cos_panel{"Path angle", "interpolation t", "cos(v, path)",
                             {{"cosine", "#d62728", trace.ts, trace.cosines}}};
        svg::Panel norm_panel{"Gradient norm", "interpolation t", "||v||",
                              {{"grad norm", "#1f77b4", trace.ts, trace.grad_norms}}};
        svg::write_panels((fs::path(cfg.out_dir) / "path_angle.svg").string(),
                          {cos_panel, norm_panel});
    }
    echo_config(cfg);
    if (!quiet) {
        std::cout << "path-angle: " << trace.ts.size() << " grid points, path norm "
                  << trace.path_direction_norm << ", wrote " << cfg.out_dir << "\n";
    }
    return 0;
}

int cmd_domination_study(const ExperimentConfig& cfg, bool quiet) {
    SsdaDataset ds = make_dataset(cfg.dataset);
    nlohmann::json runs = nlohmann::json::array();

    auto run_one = [&](Variant variant, LabelMode mode) {
        TrainConfig tc = cfg.train;
        tc.variant = variant;
        tc.source_label_mode = mode;
        TrainResult r = train(ds, tc);
        double acc = ds.target_unlabeled.empty()
                         ? evaluate_accuracy(r.final_nets.c, ds.target_labeled)
                         : evaluate_accuracy(r.final_nets.c, ds.target_unlabeled);
        DominationReport rep =
            domination_score(r.final_nets.g_st, variant == Variant::preliminary, ds,
                             cfg.diagnostics.n_probe, cfg.diagnostics.probe_seed);
        runs.push_back(nlohmann::json{{"variant", variant_name(variant)},
                                      {"source_label_mode", label_mode_name(mode)},
                                      {"target_accuracy", acc},
                                      {"label_sensitivity", rep.label_sensitivity},
                                      {"input_sensitivity", rep.input_sensitivity},
                                      {"domination_ratio", rep.domination_ratio}});
        return std::make_pair(acc, rep);
    };

    auto [acc_correct, rep_correct] = run_one(Variant::preliminary, LabelMode::correct);
    auto [acc_random, rep_random] = run_one(Variant::preliminary, LabelMode::random_labels);
    auto [acc_shifted, rep_shifted] = run_one(Variant::preliminary, LabelMode::shifted);
    auto [acc_relaxed, rep_relaxed] = run_one(Variant::relaxed, LabelMode::correct);

    double spread = std::max({acc_correct, acc_random, acc_shifted}) -
                    std::min({acc_correct, acc_random, acc_shifted});
    // An unconditional generator's ratio is identically 0; 1.0 is the neutral
    // "label and input move the output equally" reference.
    double relaxed_ratio_equivalent = std::max(rep_relaxed.domination_ratio, 1.0);

    nlohmann::json report{
        {"runs", runs},
        {"summary",
         {{"preliminary_domination_ratio", rep_correct.domination_ratio},
          {"relaxed_domination_ratio", rep_relaxed.domination_ratio},
          {"relaxed_ratio_equivalent", relaxed_ratio_equivalent},
          {"ratio_multiple", rep_correct.domination_ratio / relaxed_ratio_equivalent},
          {"probe_accuracies",
           {{"correct", acc_correct}, {"random", acc_random}, {"shifted", acc_shifted}}},
          {"probe_accuracy_spread", spread},
          {"relaxed_accuracy", acc_relaxed}}}};

    fs::create_directories(cfg.out_dir);
    write_json((fs::path(cfg.out_dir) / "domination_study.json").string(), report);
    echo_config(cfg);
    if (!quiet) {
        std::cout << "domination-study: preliminary ratio " << rep_correct.domination_ratio
                  << " vs relaxed " << rep_relaxed.domination_ratio << "; probe accuracies "
                  << acc_correct << "/" << acc_random << "/" << acc_shifted << " (spread "
                  << spread << "); relaxed accuracy " << acc_relaxed << "\n";
    }
    return 0;
}

int cmd_transfer_quality(const ExperimentConfig& cfg, const std::string& result_dir, bool quiet) {
    TrainResult result = load_train_result(result_dir);
    SsdaDataset ds = make_dataset(cfg.dataset);
    Mlp oracle = train_oracle_classifier(ds, cfg.diagnostics.oracle_steps,
                                         cfg.diagnostics.oracle_seed);
    std::vector<LabeledPoint> pool = ds.target_unlabeled;
    pool.insert(pool.end(), ds.target_labeled.begin(), ds.target_labeled.end());
    double oracle_acc = evaluate_accuracy(oracle, pool);
    TransferQuality q = transfer_quality(result.final_nets.g_st, ds, oracle,
                                         cfg.diagnostics.transfer_n, cfg.diagnostics.transfer_seed);
    bool oracle_ok = oracle_acc >= 0.99;
    nlohmann::json out{{"oracle_accuracy", oracle_acc},
                       {"oracle_ok", oracle_ok},
                       {"mean_map_error", q.mean_map_error},
                       {"label_consistency", q.label_consistency}};
    fs::create_directories(cfg.out_dir);
    write_json((fs::path(cfg.out_dir) / "transfer_quality.json").string(), out);
    echo_config(cfg);
    if (!quiet) {
        std::cout << "transfer-quality: map error " << q.mean_map_error << ", label consistency "
                  << q.label_consistency << " (oracle acc " << oracle_acc << ")\n";
    }
    return oracle_ok ? 0 : 1;
}

}  // namespace rcgan
