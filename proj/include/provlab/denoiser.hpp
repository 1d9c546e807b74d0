#pragma once

#include <cstdint>
#include <vector>

#include "provlab/autodiff.hpp"
#include "provlab/tensor.hpp"
#include "provlab/world.hpp"

namespace provlab {

struct DenoiserConfig {
    size_t pixels = 256;  // flattened image size
    size_t d_e = 64;      // token embedding width
    size_t d_t = 16;      // time embedding width (sinusoidal, not learned)
    size_t hidden = 256;  // trunk width
    size_t layers = 3;    // hidden layers
    size_t vocab = Vocabulary::kVocabSize;

    // Width of stage l's input: activations plus the re-injected context.
    size_t stage_input_width(size_t l) const {
        return (l == 0 ? pixels : hidden) + d_t + d_e;
    }
    size_t input_width() const { return stage_input_width(0); }
    bool operator==(const DenoiserConfig&) const = default;
};

// Conditional denoiser: token-embedding table -> mean-pooled condition,
// sinusoidal time features, and a silu perceptron trunk over the flattened
// image. Every affine stage (output stage included) sees
// [activations | time-emb | condition-emb], so the conditioning signal is
// re-injected at every depth instead of having to survive the mixing of the
// first layer. The trunk output parameterizes the predicted clean image
// through a sigmoid, x0_hat = sigmoid(trunk), and the noise prediction is
// assembled from it in closed form:
//
//   eps_hat = z_t / sqrt(1-abar_t) - (sqrt(abar_t)/sqrt(1-abar_t)) * x0_hat.
//
// The no-tape paths reuse the tape kernels and the tape's assembly order, so
// both give bit-identical numbers for the same parameters.
class DenoiserNet {
public:
    DenoiserNet() = default;
    DenoiserNet(DenoiserConfig cfg, uint64_t init_seed);
    // reassemble from serialized tensors; shapes are validated against cfg
    DenoiserNet(DenoiserConfig cfg, Tensor embed, std::vector<Tensor> w,
                std::vector<Tensor> b);

    const DenoiserConfig& config() const { return cfg_; }

    // embed table, then w/b per layer (trunk order); stable serialization order
    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;

    struct TapeParams {
        NodeId embed = 0;
        std::vector<NodeId> w, b;
        std::vector<NodeId> all;  // same order as params()
    };
    TapeParams stage(Tape& tape, bool requires_grad) const;

    // Mean-pooled token embedding rows for a batch of prompts: [B, d_e].
    NodeId condition(Tape& tape, const TapeParams& tp,
                     const std::vector<Prompt>& prompts) const;

    // Raw trunk output (pre-sigmoid x0 logits).
    // zt: [B, pixels], cond: [B, d_e], temb: [B, d_t] -> [B, pixels]
    NodeId forward(Tape& tape, const TapeParams& tp, NodeId zt, NodeId cond,
                   NodeId temb) const;

    // No-tape single-sample paths (used by sampling and scoring loops).
    Tensor embed_condition(const Prompt& prompt) const;  // [d_e]
    // Predicted clean image sigmoid(trunk), each value in (0,1). The noise
    // prediction needs the schedule too, so it is assembled at the
    // checkpoint level (predict_noise in the diffusion module). [pixels]
    Tensor predict_x0(const Tensor& zt, const Tensor& cond, uint32_t t) const;

private:
    DenoiserConfig cfg_;
    Tensor embed_;               // [vocab, d_e]
    std::vector<Tensor> w_, b_;  // layers+1 affine stages
};

}  // namespace provlab
