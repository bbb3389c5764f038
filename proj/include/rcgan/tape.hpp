#pragma once

// Reverse-mode autodiff over small dense vectors. Every intermediate lives on
// a tape; backward() runs one reverse sweep and accumulates parameter
// gradients into the Mat/Vec sinks registered with each affine node. Nodes
// are appended in evaluation order, so the reduction order of every sum is
// fixed and runs are bit-reproducible.

#include <stdexcept>
#include <vector>

#include "rcgan/numeric.hpp"

namespace rcgan::ad {

struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class Op {
    leaf,
    affine,     // y = (W x) / s + b, s fixed at node creation (spectral estimate)
    relu,
    tanh_fn,
    sigmoid,
    softmax,
    concat,
    log_clamp,  // log(clamp(x, eps, 1-eps)) elementwise
    pick,       // scalar x[i]
    mul,        // elementwise a * b
    sum_abs,    // scalar sum |x_i|
    neg_entropy_sum,  // scalar -sum x log x (x clamped at 1e-12 inside the log)
    lincomb,    // c1*a + c2*b elementwise (b optional)
};

struct Node {
    Op op = Op::leaf;
    int a = -1, b = -1;
    int aux_i = 0;       // pick index
    double c1 = 0.0;     // lincomb coeff / clamp eps / affine 1/s
    double c2 = 0.0;

    const Mat* W = nullptr;  // affine: weight used in forward
    Mat* dW = nullptr;       // affine: gradient sinks (may be null = frozen)
    Vec* db = nullptr;
    const Vec* u = nullptr;  // affine: power-iteration vectors when spectral
    const Vec* v = nullptr;

    Vec val;
    Vec grad;
};

class Tape {
public:
    Value leaf(Vec v);
    Value scalar_leaf(double x) { return leaf(Vec{x}); }

    // y = (W x)/sigma + b. For spectral layers pass sigma = sigma_hat and the
    // u,v estimates so backward can include d(sigma)/dW = u v^T; gradients do
    // not flow through u,v themselves.
    Value affine(const Mat& W, const Vec& b, double sigma, Value x, Mat* dW, Vec* db,
                 const Vec* u = nullptr, const Vec* v = nullptr);

    Value relu(Value x) { return unary(Op::relu, x); }
    Value tanh_fn(Value x) { return unary(Op::tanh_fn, x); }
    Value sigmoid(Value x) { return unary(Op::sigmoid, x); }
    Value softmax(Value x) { return unary(Op::softmax, x); }
    Value concat(Value a, Value b);
    Value log_clamp(Value x, double eps);
    Value pick(Value x, int index);
    Value mul(Value a, Value b);
    Value sum_abs(Value x) { return unary(Op::sum_abs, x); }
    Value neg_entropy_sum(Value x) { return unary(Op::neg_entropy_sum, x); }
    Value lincomb(Value a, double ca, Value b, double cb);
    Value add(Value a, Value b) { return lincomb(a, 1.0, b, 1.0); }
    Value scale(Value a, double c) { return lincomb(a, c, Value{}, 0.0); }

    const Vec& val(Value v) const { return nodes_[v.id].val; }
    double scalar(Value v) const { return nodes_[v.id].val[0]; }
    size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and sweeps backward, accumulating into the
    // affine nodes' registered sinks. loss must be a size-1 node.
    void backward(Value loss);

private:
    Value unary(Op op, Value x);
    Value push(Node&& n);

    std::vector<Node> nodes_;
};

}  // namespace rcgan::ad
