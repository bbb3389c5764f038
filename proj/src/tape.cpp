#include "rcgan/tape.hpp"

#include <algorithm>
#include <cmath>

namespace rcgan::ad {

Value Tape::push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::leaf(Vec v) {
    Node n;
    n.op = Op::leaf;
    n.val = std::move(v);
    return push(std::move(n));
}

Value Tape::affine(const Mat& W, const Vec& b, double sigma, Value x, Mat* dW, Vec* db,
                   const Vec* u, const Vec* v) {
    const Vec& xv = nodes_[x.id].val;
    if (static_cast<int>(xv.size()) != W.cols) {
        throw std::invalid_argument("affine: input size " + std::to_string(xv.size()) +
                                    " does not match weight cols " + std::to_string(W.cols));
    }
    Node n;
    n.op = Op::affine;
    n.a = x.id;
    n.c1 = 1.0 / sigma;
    n.W = &W;
    n.dW = dW;
    n.db = db;
    n.u = u;
    n.v = v;
    n.val.resize(W.rows);
    for (int r = 0; r < W.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < W.cols; ++c) s += W(r, c) * xv[c];
        n.val[r] = s * n.c1 + b[r];
    }
    return push(std::move(n));
}

Value Tape::unary(Op op, Value x) {
    const Vec& xv = nodes_[x.id].val;
    Node n;
    n.op = op;
    n.a = x.id;
    switch (op) {
        case Op::relu:
            n.val.resize(xv.size());
            for (size_t i = 0; i < xv.size(); ++i) n.val[i] = xv[i] > 0.0 ? xv[i] : 0.0;
            break;
        case Op::tanh_fn:
            n.val.resize(xv.size());
            for (size_t i = 0; i < xv.size(); ++i) n.val[i] = std::tanh(xv[i]);
            break;
        case Op::sigmoid:
            n.val.resize(xv.size());
            for (size_t i = 0; i < xv.size(); ++i) n.val[i] = 1.0 / (1.0 + std::exp(-xv[i]));
            break;
        case Op::softmax: {
            n.val.resize(xv.size());
            double mx = *std::max_element(xv.begin(), xv.end());
            double z = 0.0;
            for (size_t i = 0; i < xv.size(); ++i) {
                n.val[i] = std::exp(xv[i] - mx);
                z += n.val[i];
            }
            for (auto& e : n.val) e /= z;
            break;
        }
        case Op::sum_abs: {
            double s = 0.0;
            for (double e : xv) s += std::abs(e);
            n.val = {s};
            break;
        }
        case Op::neg_entropy_sum: {
            double s = 0.0;
            for (double e : xv) s += -e * std::log(std::max(e, 1e-12));
            n.val = {s};
            break;
        }
        default:
            throw std::logic_error("unary: bad op");
    }
    return push(std::move(n));
}

Value Tape::concat(Value a, Value b) {
    Node n;
    n.op = Op::concat;
    n.a = a.id;
    n.b = b.id;
    n.val = nodes_[a.id].val;
    const Vec& bv = nodes_[b.id].val;
    n.val.insert(n.val.end(), bv.begin(), bv.end());
    return push(std::move(n));
}

Value Tape::log_clamp(Value x, double eps) {
    const Vec& xv = nodes_[x.id].val;
    Node n;
    n.op = Op::log_clamp;
    n.a = x.id;
    n.c1 = eps;
    n.val.resize(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) {
        n.val[i] = std::log(std::clamp(xv[i], eps, 1.0 - eps));
    }
    return push(std::move(n));
}

Value Tape::pick(Value x, int index) {
    Node n;
    n.op = Op::pick;
    n.a = x.id;
    n.aux_i = index;
    n.val = {nodes_[x.id].val[index]};
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    const Vec& av = nodes_[a.id].val;
    const Vec& bv = nodes_[b.id].val;
    if (av.size() != bv.size()) {
        throw std::invalid_argument("mul: size mismatch");
    }
    Node n;
    n.op = Op::mul;
    n.a = a.id;
    n.b = b.id;
    n.val.resize(av.size());
    for (size_t i = 0; i < av.size(); ++i) n.val[i] = av[i] * bv[i];
    return push(std::move(n));
}

Value Tape::lincomb(Value a, double ca, Value b, double cb) {
    const Vec& av = nodes_[a.id].val;
    Node n;
    n.op = Op::lincomb;
    n.a = a.id;
    n.c1 = ca;
    n.c2 = cb;
    n.val.resize(av.size());
    if (b.valid()) {
        n.b = b.id;
        const Vec& bv = nodes_[b.id].val;
        if (bv.size() != av.size()) {
            throw std::invalid_argument("lincomb: size mismatch");
        }
        for (size_t i = 0; i < av.size(); ++i) n.val[i] = ca * av[i] + cb * bv[i];
    } else {
        for (size_t i = 0; i < av.size(); ++i) n.val[i] = ca * av[i];
    }
    return push(std::move(n));
}

void Tape::backward(Value loss) {
    if (nodes_[loss.id].val.size() != 1) {
        throw std::logic_error("backward: loss must be scalar");
    }
    for (int i = 0; i <= loss.id; ++i) {
        nodes_[i].grad.assign(nodes_[i].val.size(), 0.0);
    }
    nodes_[loss.id].grad[0] = 1.0;

    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        const Vec& g = n.grad;
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::affine: {
                Node& xn = nodes_[n.a];
                const Mat& W = *n.W;
                const Vec& xv = xn.val;
                double inv_s = n.c1;
                // dx += W^T g / s
                for (int c = 0; c < W.cols; ++c) {
                    double s = 0.0;
                    for (int r = 0; r < W.rows; ++r) s += W(r, c) * g[r];
                    xn.grad[c] += s * inv_s;
                }
                if (n.dW) {
                    // dW += g x^T / s - (g . (Wx/s)) / s * u v^T
                    for (int r = 0; r < W.rows; ++r) {
                        for (int c = 0; c < W.cols; ++c) {
                            (*n.dW)(r, c) += g[r] * xv[c] * inv_s;
                        }
                    }
                    if (n.u && n.v) {
                        double gy = 0.0;  // g . (W x) / s
                        for (int r = 0; r < W.rows; ++r) {
                            double wx = 0.0;
                            for (int c = 0; c < W.cols; ++c) wx += W(r, c) * xv[c];
                            gy += g[r] * wx * inv_s;
                        }
                        double coef = gy * inv_s;
                        for (int r = 0; r < W.rows; ++r) {
                            for (int c = 0; c < W.cols; ++c) {
                                (*n.dW)(r, c) -= coef * (*n.u)[r] * (*n.v)[c];
                            }
                        }
                    }
                }
                if (n.db) {
                    for (int r = 0; r < W.rows; ++r) (*n.db)[r] += g[r];
                }
                break;
            }
            case Op::relu: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < g.size(); ++j) {
                    if (xn.val[j] > 0.0) xn.grad[j] += g[j];
                }
                break;
            }
            case Op::tanh_fn: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < g.size(); ++j) {
                    xn.grad[j] += g[j] * (1.0 - n.val[j] * n.val[j]);
                }
                break;
            }
            case Op::sigmoid: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < g.size(); ++j) {
                    xn.grad[j] += g[j] * n.val[j] * (1.0 - n.val[j]);
                }
                break;
            }
            case Op::softmax: {
                Node& xn = nodes_[n.a];
                double gy = 0.0;
                for (size_t j = 0; j < g.size(); ++j) gy += g[j] * n.val[j];
                for (size_t j = 0; j < g.size(); ++j) {
                    xn.grad[j] += n.val[j] * (g[j] - gy);
                }
                break;
            }
            case Op::concat: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                size_t na = an.val.size();
                for (size_t j = 0; j < na; ++j) an.grad[j] += g[j];
                for (size_t j = 0; j < bn.val.size(); ++j) bn.grad[j] += g[na + j];
                break;
            }
            case Op::log_clamp: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < g.size(); ++j) {
                    double x = xn.val[j];
                    if (x > n.c1 && x < 1.0 - n.c1) xn.grad[j] += g[j] / x;
                }
                break;
            }
            case Op::pick:
                nodes_[n.a].grad[n.aux_i] += g[0];
                break;
            case Op::mul: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                for (size_t j = 0; j < g.size(); ++j) {
                    an.grad[j] += g[j] * bn.val[j];
                    bn.grad[j] += g[j] * an.val[j];
                }
                break;
            }
            case Op::sum_abs: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < xn.val.size(); ++j) {
                    double x = xn.val[j];
                    if (x > 0.0) xn.grad[j] += g[0];
                    else if (x < 0.0) xn.grad[j] -= g[0];
                }
                break;
            }
            case Op::neg_entropy_sum: {
                Node& xn = nodes_[n.a];
                for (size_t j = 0; j < xn.val.size(); ++j) {
                    double x = xn.val[j];
                    // d/dx of -x*log(max(x, c)) : -(log x + 1) above the clamp,
                    // -log c below it (the clamped log is constant there).
                    double d = x > 1e-12 ? -(std::log(x) + 1.0) : -std::log(1e-12);
                    xn.grad[j] += g[0] * d;
                }
                break;
            }
            case Op::lincomb: {
                Node& an = nodes_[n.a];
                for (size_t j = 0; j < g.size(); ++j) an.grad[j] += n.c1 * g[j];
                if (n.b >= 0) {
                    Node& bn = nodes_[n.b];
                    for (size_t j = 0; j < g.size(); ++j) bn.grad[j] += n.c2 * g[j];
                }
                break;
            }
        }
    }
}

}  // namespace rcgan::ad
