#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "provlab/tensor.hpp"

namespace provlab {

// Raw kernels shared by the tape and the no-grad inference paths. Keeping a
// single implementation of each contraction guarantees bit-identical results
// between training-time forward passes and checkpoint inference.
namespace kernels {

// C += A[m,k] * B[k,n]
void mm_nn_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);
// C += A[m,k] * B[n,k]^T
void mm_nt_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);
// C += A[k,m]^T * B[k,n]
void mm_tn_acc(const float* a, const float* b, float* c, size_t m, size_t k, size_t n);

// out = x[m,k] * w[k,n] + row-broadcast b[n]
void affine(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out);
float silu_scalar(float x);

}  // namespace kernels

using NodeId = uint32_t;

// Eager reverse-mode tape. Ops compute their value immediately and record a
// closure that scatters the output gradient back to the inputs. The op set is
// deliberately small: exactly what the denoiser, the prompt optimizer, and the
// embedding head need.
class Tape {
public:
    // Leaves. Differentiable leaves get a gradient buffer filled by backward().
    NodeId leaf(Tensor value, bool requires_grad = false);
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    // Elementwise
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId silu(NodeId a);
    NodeId sigmoid(NodeId a);

    // Contractions
    NodeId matmul(NodeId a, NodeId b);              // [m,k]x[k,n] -> [m,n]
    NodeId affine(NodeId x, NodeId w, NodeId b);    // x*w + broadcast(b)

    // Shape ops
    NodeId broadcast_rows(NodeId v, size_t rows);              // [n] -> [rows,n]
    NodeId concat_cols(NodeId a, NodeId b);                    // [m,p],[m,q] -> [m,p+q]
    NodeId slice_cols(NodeId a, size_t start, size_t len);     // [m,n] -> [m,len]
    NodeId gather_rows(NodeId table, std::vector<size_t> idx); // [v,d] -> [len(idx),d]

    // Reductions (double accumulation, scalar output)
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId squared_error(NodeId a, NodeId b);  // mean((a-b)^2)

    void backward(NodeId output);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const;
    bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;  // allocated only when requires_grad
        bool requires_grad = false;
        std::function<void(Tape&)> backprop;  // empty for leaves
    };

    NodeId emplace(Tensor value, bool requires_grad, std::function<void(Tape&)> backprop);
    void check_finite(NodeId id, const char* op) const;
    Tensor& grad_mut(NodeId id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

// Central-difference gradient oracle. `f` must evaluate the objective in
// double precision so the estimate isn't drowned by float32 rounding; the
// divisor is the realised float32 perturbation, not the nominal step.
std::vector<float> finite_diff_grad(
    const std::function<double(const std::vector<float>&)>& f,
    std::vector<float> x, float step);

}  // namespace provlab
