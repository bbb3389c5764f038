#include "rcgan/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "rcgan/rng.hpp"

namespace rcgan {

std::vector<double> uniform_grid(double lo, double hi, int points) {
    if (points < 2) throw std::invalid_argument("uniform_grid: need at least 2 points");
    std::vector<double> ts(points);
    for (int i = 0; i < points; ++i) {
        ts[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    }
    return ts;
}

PathAngleTrace trace_vector_field(const VectorField& field, const Vec& theta_init,
                                  const Vec& theta_final, const std::vector<double>& ts) {
    if (ts.empty()) throw std::invalid_argument("trace_vector_field: empty grid");
    if (theta_init.size() != theta_final.size()) {
        throw std::invalid_argument("trace_vector_field: endpoint size mismatch");
    }
    Vec dir(theta_init.size());
    for (size_t i = 0; i < dir.size(); ++i) dir[i] = theta_final[i] - theta_init[i];
    double dn = norm2(dir);
    if (dn == 0.0) {
        throw std::invalid_argument("trace_vector_field: init and final parameters coincide");
    }
    PathAngleTrace trace;
    trace.ts = ts;
    trace.path_direction_norm = dn;
    Vec theta(theta_init.size());
    for (double t : ts) {
        for (size_t i = 0; i < theta.size(); ++i) theta[i] = theta_init[i] + t * dir[i];
        Vec v = field(theta);
        if (v.size() != theta.size()) {
            throw std::runtime_error("trace_vector_field: field dimension mismatch");
        }
        double vn = norm2(v);
        trace.grad_norms.push_back(vn);
        trace.cosines.push_back(vn > 0.0 ? dot(v, dir) / (vn * dn) : 0.0);
    }
    return trace;
}

namespace {

Vec concat_params(const Snapshot& s) {
    Vec all;
    const ParamVector* pvs[] = {&s.g_st, &s.g_ts, &s.d_t, &s.d_s, &s.c};
    for (const auto* pv : pvs) {
        all.insert(all.end(), pv->values.begin(), pv->values.end());
    }
    return all;
}

}  // namespace

PathAngleTrace path_angle(const TrainResult& result, const SsdaDataset& ds,
                          const LossWeights& weights, Variant variant,
                          const std::vector<double>& grid, int eval_batch, std::uint64_t seed) {
    if (result.snapshots.size() < 2) {
        throw std::invalid_argument("path_angle: need init and final snapshots");
    }
    const Snapshot& init = result.snapshots.front();
    const Snapshot& fin = result.snapshots.back();

    // One fixed evaluation batch for every grid point.
    Rng rng(seed);
    Batch batch;
    for (int i = 0; i < eval_batch && !ds.source.empty(); ++i) {
        batch.source_xy.push_back(ds.source[rng.uniform_int(static_cast<int>(ds.source.size()))]);
    }
    for (int i = 0; i < eval_batch && !ds.target_labeled.empty(); ++i) {
        batch.target_xy.push_back(
            ds.target_labeled[rng.uniform_int(static_cast<int>(ds.target_labeled.size()))]);
    }
    for (int i = 0; i < eval_batch && !ds.target_unlabeled.empty(); ++i) {
        batch.target_unlabeled.push_back(
            ds.target_unlabeled[rng.uniform_int(static_cast<int>(ds.target_unlabeled.size()))].x);
    }
    LossWeights w = weights;
    if (batch.target_unlabeled.empty()) {
        w.lambda_pseudo = 0.0;
        w.lambda_ent = 0.0;
    }

    const ParamVector* inits[] = {&init.g_st, &init.g_ts, &init.d_t, &init.d_s, &init.c};
    std::vector<size_t> sizes;
    for (const auto* pv : inits) sizes.push_back(pv->values.size());

    VectorField field = [&](const Vec& theta) {
        // Split theta back into per-net ParamVectors and rebuild the players
        // (power state re-derived canonically, so the field is a pure
        // function of theta).
        GameNets nets;
        Mlp* ns[] = {&nets.g_st, &nets.g_ts, &nets.d_t, &nets.d_s, &nets.c};
        size_t off = 0;
        for (size_t i = 0; i < 5; ++i) {
            ParamVector pv;
            pv.layout = inits[i]->layout;
            pv.values.assign(theta.begin() + off, theta.begin() + off + sizes[i]);
            off += sizes[i];
            *ns[i] = Mlp::unflatten(pv);
        }
        MlpGrads g_gst(nets.g_st), g_gts(nets.g_ts), g_dt(nets.d_t), g_ds(nets.d_s), g_c(nets.c);
        {
            ad::Tape t;
            ad::Value v = for_d_node(t, nets, batch, batch, w, variant, &g_dt, &g_ds);
            t.backward(v);
        }
        {
            ad::Tape t;
            ad::Value v = for_g_node(t, nets, batch, w, variant, &g_gst, &g_gts);
            t.backward(v);
        }
        {
            ad::Tape t;
            ad::Value v = for_c_node(t, nets, batch, w, variant, &g_c);
            t.backward(v);
        }
        Vec out;
        out.reserve(theta.size());
        auto append = [&out](const ParamVector& pv, double sign) {
            for (double x : pv.values) out.push_back(sign * x);
        };
        append(g_gst.to_param_vector(nets.g_st.layout()), -1.0);  // G descends
        append(g_gts.to_param_vector(nets.g_ts.layout()), -1.0);
        append(g_dt.to_param_vector(nets.d_t.layout()), +1.0);    // D ascends
        append(g_ds.to_param_vector(nets.d_s.layout()), +1.0);
        append(g_c.to_param_vector(nets.c.layout()), -1.0);       // C descends
        return out;
    };

    return trace_vector_field(field, concat_params(init), concat_params(fin), grid);
}

DominationReport domination_score(const Mlp& gen, bool conditional, const SsdaDataset& ds,
                                  int n_probe, std::uint64_t seed) {
    if (n_probe < 2) throw std::invalid_argument("domination_score: n_probe must be >= 2");
    if (ds.source.empty()) throw std::invalid_argument("domination_score: dataset has no source points");
    Rng rng(seed);
    int k = ds.k;
    int feat = static_cast<int>(ds.source.front().x.size());
    if (conditional && gen.input_dim() != feat + k) {
        throw std::invalid_argument("domination_score: generator is not conditional (input dim " +
                                    std::to_string(gen.input_dim()) + ")");
    }

    std::vector<Vec> probes;
    for (int i = 0; i < n_probe; ++i) {
        probes.push_back(ds.source[rng.uniform_int(static_cast<int>(ds.source.size()))].x);
    }

    DominationReport rep;
    int labels = conditional ? k : 1;
    // outs[j][i] = G(x_i with label j)
    std::vector<std::vector<Vec>> outs(labels, std::vector<Vec>(n_probe));
    for (int j = 0; j < labels; ++j) {
        for (int i = 0; i < n_probe; ++i) {
            Vec in = probes[i];
            if (conditional) {
                Vec oh = one_hot(k, j);
                for (auto& e : oh) e *= kGenLabelGain;
                in.insert(in.end(), oh.begin(), oh.end());
            }
            outs[j][i] = gen.forward(in);
        }
    }

    if (conditional && k >= 2) {
        double acc = 0.0;
        int pairs = k * (k - 1) / 2;
        for (int i = 0; i < n_probe; ++i) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) {
                for (int j2 = j + 1; j2 < k; ++j2) s += l2_dist(outs[j][i], outs[j2][i]);
            }
            acc += s / pairs;
        }
        rep.label_sensitivity = acc / n_probe;
    }
    {
        double acc = 0.0;
        int pairs = n_probe * (n_probe - 1) / 2;
        for (int j = 0; j < labels; ++j) {
            double s = 0.0;
            for (int i = 0; i < n_probe; ++i) {
                for (int i2 = i + 1; i2 < n_probe; ++i2) s += l2_dist(outs[j][i], outs[j][i2]);
            }
            acc += s / pairs;
        }
        rep.input_sensitivity = acc / labels;
    }
    rep.domination_ratio = rep.label_sensitivity / std::max(rep.input_sensitivity, 1e-12);
    return rep;
}

TransferQuality transfer_quality(const Mlp& gen, const SsdaDataset& ds, const Mlp& c_oracle,
                                 int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("transfer_quality: n must be >= 1");
    if (ds.source.empty()) throw std::invalid_argument("transfer_quality: dataset has no source points");
    Rng rng(seed);
    int feat = static_cast<int>(ds.source.front().x.size());
    bool conditional = gen.input_dim() == feat + ds.k;
    TransferQuality q;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const auto& p = ds.source[rng.uniform_int(static_cast<int>(ds.source.size()))];
        Vec in = p.x;
        if (conditional) {
            Vec oh = one_hot(ds.k, p.y);
            for (auto& e : oh) e *= kGenLabelGain;
            in.insert(in.end(), oh.begin(), oh.end());
        }
        Vec gx = gen.forward(in);
        q.mean_map_error += l2_dist(gx, ideal_transfer(ds, p.x));
        if (argmax(c_oracle.forward(gx)) == p.y) ++hits;
    }
    q.mean_map_error /= n;
    q.label_consistency = static_cast<double>(hits) / n;
    return q;
}

}  // namespace rcgan
