#pragma once

// Sequential dense networks with reverse-mode gradients and optional spectral
// normalization. Instantiates the generators, discriminators and classifier
// of the adaptation game.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rcgan/numeric.hpp"
#include "rcgan/rng.hpp"
#include "rcgan/tape.hpp"

namespace rcgan {

enum class Act { relu, tanh_fn, sigmoid, identity, softmax };

std::string act_name(Act a);
Act act_from_name(const std::string& s);

// Architecture descriptor; two identically-shaped nets share one layout.
struct ParamLayout {
    std::vector<int> dims;
    std::vector<Act> acts;
    std::vector<std::uint8_t> spectral;

    bool operator==(const ParamLayout&) const = default;
    size_t total_params() const;
};

// Flat view of all trainable parameters (per layer: weight row-major, then bias).
struct ParamVector {
    ParamLayout layout;
    Vec values;
};

struct MlpLayer {
    Mat W;  // out x in
    Vec b;
    Act act = Act::identity;
    bool spectral = false;
    Vec u, v;  // power-iteration estimates of the top singular pair
};

// Gradient sinks matching an Mlp's layer shapes.
struct MlpGrads;

class Mlp {
public:
    Mlp() = default;

    // Glorot-uniform weights, zero biases; spectral layers get 5 warm-up
    // power iterations. softmax is only accepted as the final activation.
    static Mlp make(const std::vector<int>& dims, const std::vector<Act>& acts,
                    const std::vector<std::uint8_t>& spectral, Rng& rng);

    int input_dim() const { return layout_.dims.front(); }
    int output_dim() const { return layout_.dims.back(); }
    int layer_count() const { return static_cast<int>(layers_.size()); }
    const ParamLayout& layout() const { return layout_; }
    const std::vector<MlpLayer>& layers() const { return layers_; }
    std::vector<MlpLayer>& layers() { return layers_; }

    // Current estimate u^T W v of the layer's top singular value, clamped at
    // 1e-12; 1.0 for non-spectral layers.
    double sigma_hat(int layer) const;

    Vec forward(const Vec& input) const;

    // Builds the forward pass on the tape; grads (optional) receives
    // parameter gradients on backward.
    ad::Value apply(ad::Tape& tape, ad::Value input, MlpGrads* grads) const;

    // One power iteration per spectral layer: v <- normalize(W^T u),
    // u <- normalize(W v).
    void spectral_step();

    ParamVector flatten() const;
    // Loads parameters only; power-iteration state is kept as-is.
    void load_params(const ParamVector& pv);
    // Rebuilds a net from flat parameters with canonically re-derived power
    // state (deterministic: fixed start vector + 5 warm-up iterations).
    static Mlp unflatten(const ParamVector& pv);

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    void refresh_power_state(int warmup_iters);

    ParamLayout layout_;
    std::vector<MlpLayer> layers_;
};

struct MlpGrads {
    std::vector<Mat> dW;
    std::vector<Vec> db;

    explicit MlpGrads(const Mlp& net);
    void zero();
    ParamVector to_param_vector(const ParamLayout& layout) const;
};

// Loss over the outputs of one net on a batch of inputs, as a tape graph.
using BatchLossFn = std::function<ad::Value(ad::Tape&, const std::vector<ad::Value>&)>;

// Reverse-mode gradient of loss_fn(net(inputs)) w.r.t. the net's parameters.
// Throws (naming the batch index) when an output or the loss is non-finite.
ParamVector grad(const Mlp& net, const std::vector<Vec>& inputs, const BatchLossFn& loss_fn);

// (1-t)*a + t*b; layouts must match. t may lie outside [0,1].
ParamVector lerp(const ParamVector& a, const ParamVector& b, double t);

}  // namespace rcgan
