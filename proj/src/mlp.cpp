#include "rcgan/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rcgan {

namespace {

constexpr double kSigmaClamp = 1e-12;

void normalize_or_keep(Vec& v) {
    double n = norm2(v);
    if (n > 1e-300) {
        for (auto& e : v) e /= n;
    }
}

}  // namespace

std::string act_name(Act a) {
    switch (a) {
        case Act::relu: return "relu";
        case Act::tanh_fn: return "tanh";
        case Act::sigmoid: return "sigmoid";
        case Act::identity: return "identity";
        case Act::softmax: return "softmax";
    }
    return "identity";
}

Act act_from_name(const std::string& s) {
    if (s == "relu") return Act::relu;
    if (s == "tanh") return Act::tanh_fn;
    if (s == "sigmoid") return Act::sigmoid;
    if (s == "identity") return Act::identity;
    if (s == "softmax") return Act::softmax;
    throw std::invalid_argument("unknown activation: " + s);
}

size_t ParamLayout::total_params() const {
    size_t n = 0;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        n += static_cast<size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
    }
    return n;
}

Mlp Mlp::make(const std::vector<int>& dims, const std::vector<Act>& acts,
              const std::vector<std::uint8_t>& spectral, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least one layer");
    if (acts.size() != dims.size() - 1 || spectral.size() != dims.size() - 1) {
        throw std::invalid_argument("Mlp: acts/spectral must have one entry per layer");
    }
    for (int d : dims) {
        if (d <= 0) throw std::invalid_argument("Mlp: layer dims must be positive");
    }
    for (size_t l = 0; l < acts.size(); ++l) {
        if (acts[l] == Act::softmax && l + 1 != acts.size()) {
            throw std::invalid_argument("Mlp: softmax is only valid as the final activation");
        }
    }
    Mlp net;
    net.layout_.dims = dims;
    net.layout_.acts = acts;
    net.layout_.spectral = spectral;
    net.layers_.resize(dims.size() - 1);
    for (size_t l = 0; l < net.layers_.size(); ++l) {
        MlpLayer& layer = net.layers_[l];
        int fan_in = dims[l], fan_out = dims[l + 1];
        layer.W = Mat(fan_out, fan_in);
        double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : layer.W.a) w = rng.uniform(-s, s);
        layer.b.assign(fan_out, 0.0);
        layer.act = acts[l];
        layer.spectral = spectral[l] != 0;
        layer.u.assign(fan_out, 1.0 / std::sqrt(static_cast<double>(fan_out)));
        layer.v.assign(fan_in, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    }
    net.refresh_power_state(5);
    return net;
}

void Mlp::refresh_power_state(int warmup_iters) {
    for (auto& layer : layers_) {
        if (!layer.spectral) continue;
        layer.u.assign(layer.W.rows, 1.0 / std::sqrt(static_cast<double>(layer.W.rows)));
        layer.v.assign(layer.W.cols, 1.0 / std::sqrt(static_cast<double>(layer.W.cols)));
    }
    for (int i = 0; i < warmup_iters; ++i) spectral_step();
}

double Mlp::sigma_hat(int layer) const {
    const MlpLayer& l = layers_[layer];
    if (!l.spectral) return 1.0;
    double s = 0.0;
    for (int r = 0; r < l.W.rows; ++r) {
        double wv = 0.0;
        for (int c = 0; c < l.W.cols; ++c) wv += l.W(r, c) * l.v[c];
        s += l.u[r] * wv;
    }
    return std::max(s, kSigmaClamp);
}

void Mlp::spectral_step() {
    for (auto& l : layers_) {
        if (!l.spectral) continue;
        // v <- normalize(W^T u)
        Vec wv(l.W.cols, 0.0);
        for (int r = 0; r < l.W.rows; ++r) {
            for (int c = 0; c < l.W.cols; ++c) wv[c] += l.W(r, c) * l.u[r];
        }
        normalize_or_keep(wv);
        if (norm2(wv) > 0.5) l.v = wv;  // keep previous direction on zero weights
        // u <- normalize(W v)
        Vec wu(l.W.rows, 0.0);
        for (int r = 0; r < l.W.rows; ++r) {
            for (int c = 0; c < l.W.cols; ++c) wu[r] += l.W(r, c) * l.v[c];
        }
        normalize_or_keep(wu);
        if (norm2(wu) > 0.5) l.u = wu;
    }
}

Vec Mlp::forward(const Vec& input) const {
    if (static_cast<int>(input.size()) != input_dim()) {
        throw std::invalid_argument("forward: input size " + std::to_string(input.size()) +
                                    " does not match input dim " + std::to_string(input_dim()));
    }
    Vec x = input;
    for (int li = 0; li < layer_count(); ++li) {
        const MlpLayer& l = layers_[li];
        double inv_s = 1.0 / sigma_hat(li);
        Vec y(l.W.rows);
        for (int r = 0; r < l.W.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < l.W.cols; ++c) s += l.W(r, c) * x[c];
            y[r] = s * inv_s + l.b[r];
        }
        switch (l.act) {
            case Act::relu:
                for (auto& e : y) e = e > 0.0 ? e : 0.0;
                break;
            case Act::tanh_fn:
                for (auto& e : y) e = std::tanh(e);
                break;
            case Act::sigmoid:
                for (auto& e : y) e = 1.0 / (1.0 + std::exp(-e));
                break;
            case Act::identity:
                break;
            case Act::softmax: {
                double mx = *std::max_element(y.begin(), y.end());
                double z = 0.0;
                for (auto& e : y) {
                    e = std::exp(e - mx);
                    z += e;
                }
                for (auto& e : y) e /= z;
                break;
            }
        }
        x = std::move(y);
    }
    return x;
}

ad::Value Mlp::apply(ad::Tape& tape, ad::Value input, MlpGrads* grads) const {
    ad::Value x = input;
    for (int li = 0; li < layer_count(); ++li) {
        const MlpLayer& l = layers_[li];
        Mat* dW = grads ? &grads->dW[li] : nullptr;
        Vec* db = grads ? &grads->db[li] : nullptr;
        const Vec* u = l.spectral ? &l.u : nullptr;
        const Vec* v = l.spectral ? &l.v : nullptr;
        x = tape.affine(l.W, l.b, sigma_hat(li), x, dW, db, u, v);
        switch (l.act) {
            case Act::relu: x = tape.relu(x); break;
            case Act::tanh_fn: x = tape.tanh_fn(x); break;
            case Act::sigmoid: x = tape.sigmoid(x); break;
            case Act::identity: break;
            case Act::softmax: x = tape.softmax(x); break;
        }
    }
    return x;
}

ParamVector Mlp::flatten() const {
    ParamVector pv;
    pv.layout = layout_;
    pv.values.reserve(layout_.total_params());
    for (const auto& l : layers_) {
        pv.values.insert(pv.values.end(), l.W.a.begin(), l.W.a.end());
        pv.values.insert(pv.values.end(), l.b.begin(), l.b.end());
    }
    return pv;
}

void Mlp::load_params(const ParamVector& pv) {
    if (!(pv.layout == layout_)) {
        throw std::invalid_argument("load_params: layout mismatch");
    }
    size_t off = 0;
    for (auto& l : layers_) {
        std::copy(pv.values.begin() + off, pv.values.begin() + off + l.W.a.size(),
                  l.W.a.begin());
        off += l.W.a.size();
        std::copy(pv.values.begin() + off, pv.values.begin() + off + l.b.size(), l.b.begin());
        off += l.b.size();
    }
}

Mlp Mlp::unflatten(const ParamVector& pv) {
    if (pv.values.size() != pv.layout.total_params()) {
        throw std::invalid_argument("unflatten: value count " + std::to_string(pv.values.size()) +
                                    " does not match layout (" +
                                    std::to_string(pv.layout.total_params()) + ")");
    }
    Rng dummy(0);
    Mlp net = make(pv.layout.dims, pv.layout.acts, pv.layout.spectral, dummy);
    net.load_params(pv);
    net.refresh_power_state(5);
    return net;
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json j;
    j["layer_dims"] = layout_.dims;
    nlohmann::json acts = nlohmann::json::array();
    for (Act a : layout_.acts) acts.push_back(act_name(a));
    j["activations"] = std::move(acts);
    nlohmann::json ws = nlohmann::json::array(), bs = nlohmann::json::array();
    for (const auto& l : layers_) {
        ws.push_back(l.W.a);
        bs.push_back(l.b);
    }
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    nlohmann::json sp = nlohmann::json::array();
    for (auto s : layout_.spectral) sp.push_back(s != 0);
    j["spectral_norm"] = std::move(sp);
    return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    std::vector<int> dims = j.at("layer_dims").get<std::vector<int>>();
    std::vector<Act> acts;
    for (const auto& a : j.at("activations")) acts.push_back(act_from_name(a.get<std::string>()));
    std::vector<std::uint8_t> spectral;
    for (const auto& s : j.at("spectral_norm")) spectral.push_back(s.get<bool>() ? 1 : 0);
    Rng dummy(0);
    Mlp net = make(dims, acts, spectral, dummy);
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    for (int li = 0; li < net.layer_count(); ++li) {
        Vec w = ws.at(li).get<Vec>();
        Vec b = bs.at(li).get<Vec>();
        if (w.size() != net.layers_[li].W.a.size() || b.size() != net.layers_[li].b.size()) {
            throw std::invalid_argument("Mlp::from_json: layer " + std::to_string(li) +
                                        " size mismatch");
        }
        net.layers_[li].W.a = std::move(w);
        net.layers_[li].b = std::move(b);
    }
    net.refresh_power_state(5);
    return net;
}

MlpGrads::MlpGrads(const Mlp& net) {
    for (const auto& l : net.layers()) {
        dW.emplace_back(l.W.rows, l.W.cols);
        db.emplace_back(l.b.size(), 0.0);
    }
}

void MlpGrads::zero() {
    for (auto& m : dW) std::fill(m.a.begin(), m.a.end(), 0.0);
    for (auto& v : db) std::fill(v.begin(), v.end(), 0.0);
}

ParamVector MlpGrads::to_param_vector(const ParamLayout& layout) const {
    ParamVector pv;
    pv.layout = layout;
    pv.values.reserve(layout.total_params());
    for (size_t l = 0; l < dW.size(); ++l) {
        pv.values.insert(pv.values.end(), dW[l].a.begin(), dW[l].a.end());
        pv.values.insert(pv.values.end(), db[l].begin(), db[l].end());
    }
    return pv;
}

ParamVector grad(const Mlp& net, const std::vector<Vec>& inputs, const BatchLossFn& loss_fn) {
    ad::Tape tape;
    MlpGrads grads(net);
    std::vector<ad::Value> outputs;
    outputs.reserve(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
        ad::Value out = net.apply(tape, tape.leaf(inputs[i]), &grads);
        if (!all_finite(tape.val(out))) {
            throw std::runtime_error("grad: non-finite network output at batch index " +
                                     std::to_string(i));
        }
        outputs.push_back(out);
    }
    ad::Value loss = loss_fn(tape, outputs);
    if (!std::isfinite(tape.scalar(loss))) {
        throw std::runtime_error("grad: non-finite loss over the batch");
    }
    tape.backward(loss);
    return grads.to_param_vector(net.layout());
}

ParamVector lerp(const ParamVector& a, const ParamVector& b, double t) {
    if (!(a.layout == b.layout)) {
        throw std::invalid_argument("lerp: layout mismatch");
    }
    ParamVector out;
    out.layout = a.layout;
    out.values.resize(a.values.size());
    for (size_t i = 0; i < a.values.size(); ++i) {
        out.values[i] = (1.0 - t) * a.values[i] + t * b.values[i];
    }
    return out;
}

}  // namespace rcgan
