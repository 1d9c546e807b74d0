#include "provlab/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace provlab {

namespace kernels {

void mm_nn_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (size_t p = 0; p < k; ++p) {
            float av = arow[p];
            const float* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void mm_nt_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
    // Four independent float partial sums per dot product: keeps the inner
    // loop vectorizable (a serial double accumulator would not be) while
    // bounding the rounding error well below the 1e-4 gradcheck tolerance at
    // the contraction lengths used here (k <= a few hundred).
    for (size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (size_t j = 0; j < n; ++j) {
            const float* brow = b + j * k;
            float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
            size_t p = 0;
            for (; p + 4 <= k; p += 4) {
                s0 += arow[p] * brow[p];
                s1 += arow[p + 1] * brow[p + 1];
                s2 += arow[p + 2] * brow[p + 2];
                s3 += arow[p + 3] * brow[p + 3];
            }
            for (; p < k; ++p) s0 += arow[p] * brow[p];
            crow[j] += (s0 + s1) + (s2 + s3);
        }
    }
}

void mm_tn_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n) {
    // a is [k,m] read column-wise; iterate over the contraction dim outermost
    // so every inner loop is unit-stride.
    for (size_t p = 0; p < k; ++p) {
        const float* arow = a + p * m;
        const float* brow = b + p * n;
        for (size_t i = 0; i < m; ++i) {
            float av = arow[i];
            float* crow = c + i * n;
            for (size_t j = 0; j < n; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

void affine(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out) {
    size_t m = x.dim(0), k = x.dim(1), n = w.dim(1);
    out = Tensor({m, n});
    for (size_t i = 0; i < m; ++i) {
        float* row = out.data() + i * n;
        for (size_t j = 0; j < n; ++j) row[j] = b.at(j);
    }
    mm_nn_acc(x.data(), w.data(), out.data(), m, k, n);
}

float silu_scalar(float x) {
    return x / (1.0f + std::exp(-x));
}

}  // namespace kernels

namespace {

void require_rank(const Tensor& t, size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(op) + ": expected rank " +
                                    std::to_string(rank) + " tensor, got shape " +
                                    t.shape_str());
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace

NodeId Tape::emplace(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop) {
    Node node;
    node.requires_grad = requires_grad;
    if (requires_grad) {
        node.grad = Tensor::zeros(value.shape());
    }
    node.value = std::move(value);
    node.backprop = std::move(backprop);
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_finite(NodeId id, const char* op) const {
    if (!nodes_[id].value.all_finite()) {
        throw std::runtime_error(std::string(op) + " produced a non-finite value");
    }
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
    if (!value.all_finite()) {
        throw std::runtime_error("leaf tensor contains a non-finite value");
    }
    return emplace(std::move(value), requires_grad, {});
}

const Tensor& Tape::grad(NodeId id) const {
    if (!nodes_[id].requires_grad) {
        throw std::invalid_argument("node " + std::to_string(id) + " does not track gradients");
    }
    if (!ran_backward_) {
        throw std::runtime_error("backward has not run on this tape");
    }
    return nodes_[id].grad;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) out.at(i) = ta.at(i) + tb.at(i);
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [a, b, id](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.numel(); ++i) ga.at(i) += g.at(i);
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < g.numel(); ++i) gb.at(i) += g.at(i);
        }
    };
    check_finite(id, "add");
    return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) out.at(i) = ta.at(i) - tb.at(i);
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [a, b, id](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.numel(); ++i) ga.at(i) += g.at(i);
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < g.numel(); ++i) gb.at(i) -= g.at(i);
        }
    };
    check_finite(id, "sub");
    return id;
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "mul");
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) out.at(i) = ta.at(i) * tb.at(i);
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [a, b, id](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_mut(a);
            for (size_t i = 0; i < g.numel(); ++i) ga.at(i) += g.at(i) * vb.at(i);
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < g.numel(); ++i) gb.at(i) += g.at(i) * va.at(i);
        }
    };
    check_finite(id, "mul");
    return id;
}

NodeId Tape::relu(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) out.at(i) = ta.at(i) > 0.0f ? ta.at(i) : 0.0f;
    NodeId id = emplace(std::move(out), requires_grad(a), {});
    nodes_[id].backprop = [a, id](Tape& t) {
        if (!t.requires_grad(a)) return;
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& va = t.value(a);
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.numel(); ++i) {
            if (va.at(i) > 0.0f) ga.at(i) += g.at(i);
        }
    };
    check_finite(id, "relu");
    return id;
}

NodeId Tape::silu(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) out.at(i) = kernels::silu_scalar(ta.at(i));
    NodeId id = emplace(std::move(out), requires_grad(a), {});
    nodes_[id].backprop = [a, id](Tape& t) {
        if (!t.requires_grad(a)) return;
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& va = t.value(a);
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.numel(); ++i) {
            float x = va.at(i);
            float s = 1.0f / (1.0f + std::exp(-x));
            ga.at(i) += g.at(i) * s * (1.0f + x * (1.0f - s));
        }
    };
    check_finite(id, "silu");
    return id;
}

NodeId Tape::sigmoid(NodeId a) {
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (size_t i = 0; i < out.numel(); ++i) {
        out.at(i) = 1.0f / (1.0f + std::exp(-ta.at(i)));
    }
    NodeId id = emplace(std::move(out), requires_grad(a), {});
    nodes_[id].backprop = [a, id](Tape& t) {
        if (!t.requires_grad(a)) return;
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& vo = t.value(id);
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < g.numel(); ++i) {
            float s = vo.at(i);
            ga.at(i) += g.at(i) * s * (1.0f - s);
        }
    };
    check_finite(id, "sigmoid");
    return id;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "matmul");
    require_rank(tb, 2, "matmul");
    if (ta.dim(1) != tb.dim(0)) {
        throw std::invalid_argument("matmul: inner dims differ, " + ta.shape_str() + " x " +
                                    tb.shape_str());
    }
    size_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    Tensor out({m, n});
    kernels::mm_nn_acc(ta.data(), tb.data(), out.data(), m, k, n);
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [a, b, id, m, k, n](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        if (t.requires_grad(a)) {
            // dA += G[m,n] * B[k,n]^T
            kernels::mm_nt_acc(g.data(), t.value(b).data(), t.grad_mut(a).data(), m, n, k);
        }
        if (t.requires_grad(b)) {
            // dB[k,n] += A[m,k]^T * G[m,n]; contraction over m
            kernels::mm_tn_acc(t.value(a).data(), g.data(), t.grad_mut(b).data(), k, m, n);
        }
    };
    check_finite(id, "matmul");
    return id;
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
    const Tensor& tx = value(x);
    const Tensor& tw = value(w);
    const Tensor& tb = value(b);
    require_rank(tx, 2, "affine");
    require_rank(tw, 2, "affine");
    require_rank(tb, 1, "affine");
    if (tx.dim(1) != tw.dim(0) || tw.dim(1) != tb.dim(0)) {
        throw std::invalid_argument("affine: incompatible shapes " + tx.shape_str() + ", " +
                                    tw.shape_str() + ", " + tb.shape_str());
    }
    size_t m = tx.dim(0), k = tx.dim(1), n = tw.dim(1);
    Tensor out;
    kernels::affine(tx, tw, tb, out);
    bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [x, w, b, id, m, k, n](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        if (t.requires_grad(x)) {
            kernels::mm_nt_acc(g.data(), t.value(w).data(), t.grad_mut(x).data(), m, n, k);
        }
        if (t.requires_grad(w)) {
            // dW[k,n] += X[m,k]^T * G[m,n]; contraction over m
            kernels::mm_tn_acc(t.value(x).data(), g.data(), t.grad_mut(w).data(), k, m, n);
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < m; ++i) {
                const float* grow = g.data() + i * n;
                for (size_t j = 0; j < n; ++j) gb.at(j) += grow[j];
            }
        }
    };
    check_finite(id, "affine");
    return id;
}

NodeId Tape::broadcast_rows(NodeId v, size_t rows) {
    const Tensor& tv = value(v);
    require_rank(tv, 1, "broadcast_rows");
    size_t n = tv.dim(0);
    Tensor out({rows, n});
    for (size_t i = 0; i < rows; ++i) {
        float* row = out.data() + i * n;
        for (size_t j = 0; j < n; ++j) row[j] = tv.at(j);
    }
    NodeId id = emplace(std::move(out), requires_grad(v), {});
    nodes_[id].backprop = [v, id, rows, n](Tape& t) {
        if (!t.requires_grad(v)) return;
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gv = t.grad_mut(v);
        for (size_t i = 0; i < rows; ++i) {
            const float* grow = g.data() + i * n;
            for (size_t j = 0; j < n; ++j) gv.at(j) += grow[j];
        }
    };
    check_finite(id, "broadcast_rows");
    return id;
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "concat_cols");
    require_rank(tb, 2, "concat_cols");
    if (ta.dim(0) != tb.dim(0)) {
        throw std::invalid_argument("concat_cols: row counts differ, " + ta.shape_str() +
                                    " vs " + tb.shape_str());
    }
    size_t m = ta.dim(0), p = ta.dim(1), q = tb.dim(1);
    Tensor out({m, p + q});
    for (size_t i = 0; i < m; ++i) {
        float* row = out.data() + i * (p + q);
        const float* arow = ta.data() + i * p;
        const float* brow = tb.data() + i * q;
        for (size_t j = 0; j < p; ++j) row[j] = arow[j];
        for (size_t j = 0; j < q; ++j) row[p + j] = brow[j];
    }
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(std::move(out), rg, {});
    nodes_[id].backprop = [a, b, id, m, p, q](Tape& t) {
        const Tensor& g = t.nodes_[id].grad;
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_mut(a);
            for (size_t i = 0; i < m; ++i) {
                const float* grow = g.data() + i * (p + q);
                float* arow = ga.data() + i * p;
                for (size_t j = 0; j < p; ++j) arow[j] += grow[j];
            }
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < m; ++i) {
                const float* grow = g.data() + i * (p + q);
                float* brow = gb.data() + i * q;
                for (size_t j = 0; j < q; ++j) brow[j] += grow[p + j];
            }
        }
    };
    check_finite(id, "concat_cols");
    return id;
}

NodeId Tape::slice_cols(NodeId a, size_t start, size_t len) {
    const Tensor& ta = value(a);
    require_rank(ta, 2, "slice_cols");
    size_t m = ta.dim(0), n = ta.dim(1);
    if (start + len > n) {
        throw std::invalid_argument("slice_cols: [" + std::to_string(start) + ", " +
                                    std::to_string(start + len) + ") out of range for " +
                                    ta.shape_str());
    }
    Tensor out({m, len});
    for (size_t i = 0; i < m; ++i) {
        const float* arow = ta.data() + i * n + start;
        float* row = out.data() + i * len;
        for (size_t j = 0; j < len; ++j) row[j] = arow[j];
    }
    NodeId id = emplace(std::move(out), requires_grad(a), {});
    nodes_[id].backprop = [a, id, m, n, start, len](Tape& t) {
        if (!t.requires_grad(a)) return;
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < m; ++i) {
            const float* grow = g.data() + i * len;
            float* arow = ga.data() + i * n + start;
            for (size_t j = 0; j < len; ++j) arow[j] += grow[j];
        }
    };
    check_finite(id, "slice_cols");
    return id;
}

NodeId Tape::gather_rows(NodeId table, std::vector<size_t> idx) {
    const Tensor& tt = value(table);
    require_rank(tt, 2, "gather_rows");
    size_t v = tt.dim(0), d = tt.dim(1);
    for (size_t i : idx) {
        if (i >= v) {
            throw std::invalid_argument("gather_rows: index " + std::to_string(i) +
                                        " out of range for table " + tt.shape_str());
        }
    }
    size_t m = idx.size();
    Tensor out({m, d});
    for (size_t i = 0; i < m; ++i) {
        const float* src = tt.data() + idx[i] * d;
        float* row = out.data() + i * d;
        for (size_t j = 0; j < d; ++j) row[j] = src[j];
    }
    NodeId id = emplace(std::move(out), requires_grad(table), {});
    nodes_[id].backprop = [table, id, m, d, idx = std::move(idx)](Tape& t) {
        if (!t.requires_grad(table)) return;
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gt = t.grad_mut(table);
        for (size_t i = 0; i < m; ++i) {
            const float* grow = g.data() + i * d;
            float* dst = gt.data() + idx[i] * d;
            for (size_t j = 0; j < d; ++j) dst[j] += grow[j];
        }
    };
    check_finite(id, "gather_rows");
    return id;
}

NodeId Tape::sum(NodeId a) {
    const Tensor& ta = value(a);
    double acc = 0.0;
    for (size_t i = 0; i < ta.numel(); ++i) acc += double(ta.at(i));
    NodeId id = emplace(Tensor::scalar(float(acc)), requires_grad(a), {});
    nodes_[id].backprop = [a, id](Tape& t) {
        if (!t.requires_grad(a)) return;
        float g = t.nodes_[id].grad.at(0);
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < ga.numel(); ++i) ga.at(i) += g;
    };
    check_finite(id, "sum");
    return id;
}

NodeId Tape::mean(NodeId a) {
    const Tensor& ta = value(a);
    if (ta.numel() == 0) {
        throw std::invalid_argument("mean of an empty tensor");
    }
    double acc = 0.0;
    for (size_t i = 0; i < ta.numel(); ++i) acc += double(ta.at(i));
    double inv_n = 1.0 / double(ta.numel());
    NodeId id = emplace(Tensor::scalar(float(acc * inv_n)), requires_grad(a), {});
    nodes_[id].backprop = [a, id, inv_n](Tape& t) {
        if (!t.requires_grad(a)) return;
        float g = t.nodes_[id].grad.at(0) * float(inv_n);
        Tensor& ga = t.grad_mut(a);
        for (size_t i = 0; i < ga.numel(); ++i) ga.at(i) += g;
    };
    check_finite(id, "mean");
    return id;
}

NodeId Tape::squared_error(NodeId a, NodeId b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "squared_error");
    if (ta.numel() == 0) {
        throw std::invalid_argument("squared_error of empty tensors");
    }
    double acc = 0.0;
    for (size_t i = 0; i < ta.numel(); ++i) {
        double d = double(ta.at(i)) - double(tb.at(i));
        acc += d * d;
    }
    double inv_n = 1.0 / double(ta.numel());
    bool rg = requires_grad(a) || requires_grad(b);
    NodeId id = emplace(Tensor::scalar(float(acc * inv_n)), rg, {});
    nodes_[id].backprop = [a, b, id, inv_n](Tape& t) {
        float g = t.nodes_[id].grad.at(0);
        const Tensor& va = t.value(a);
        const Tensor& vb = t.value(b);
        float c = 2.0f * g * float(inv_n);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_mut(a);
            for (size_t i = 0; i < ga.numel(); ++i) ga.at(i) += c * (va.at(i) - vb.at(i));
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_mut(b);
            for (size_t i = 0; i < gb.numel(); ++i) gb.at(i) -= c * (va.at(i) - vb.at(i));
        }
    };
    check_finite(id, "squared_error");
    return id;
}

void Tape::backward(NodeId output) {
    if (output >= nodes_.size()) {
        throw std::invalid_argument("backward: unknown node id");
    }
    if (nodes_[output].value.numel() != 1) {
        throw std::invalid_argument("backward requires a scalar output, got shape " +
                                    nodes_[output].value.shape_str());
    }
    if (ran_backward_) {
        throw std::runtime_error("backward already ran on this tape");
    }
    ran_backward_ = true;
    if (!nodes_[output].requires_grad) {
        return;  // nothing differentiable upstream; all grads stay zero
    }
    nodes_[output].grad.at(0) = 1.0f;
    // Nodes recorded after `output` cannot feed into it; walk from the output
    // back to the leaves.
    for (size_t i = size_t(output) + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.requires_grad && node.backprop) {
            node.backprop(*this);
        }
    }
}

std::vector<float> finite_diff_grad(
    const std::function<double(const std::vector<float>&)>& f,
    std::vector<float> x, float step) {
    if (!(step > 0.0f)) {
        throw std::invalid_argument("finite_diff_grad: step must be positive");
    }
    std::vector<float> grad(x.size(), 0.0f);
    for (size_t i = 0; i < x.size(); ++i) {
        float orig = x[i];
        float xp = orig + step;
        float xm = orig - step;
        x[i] = xp;
        double fp = f(x);
        x[i] = xm;
        double fm = f(x);
        x[i] = orig;
        double denom = double(xp) - double(xm);
        grad[i] = float((fp - fm) / denom);
    }
    return grad;
}

}  // namespace provlab
