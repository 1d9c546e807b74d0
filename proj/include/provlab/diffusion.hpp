#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "provlab/denoiser.hpp"
#include "provlab/schedule.hpp"
#include "provlab/sha256.hpp"
#include "provlab/tensor.hpp"
#include "provlab/world.hpp"

namespace provlab {

// The latent codec collapses to the identity at this image scale; kept as a
// named stage so the pipeline shape mirrors bigger systems.
struct IdentityCodec {
    static Tensor encode(Tensor x) { return x; }
    static Tensor decode(Tensor x) { return x; }
};

struct TrainConfig {
    uint32_t iterations = 36000;
    uint32_t batch_size = 16;
    float lr = 2e-3f;
    uint32_t t_count = 256;
    DenoiserConfig arch;  // arch.pixels is overwritten from the world config
};

// Who trained this model, on what, and how: enough to re-derive or audit any
// checkpoint in the lab.
struct Provenance {
    Digest dataset_digest{};  // zero when unknown
    Digest parent{};          // zero for from-scratch training
    float rho = -1.0f;        // generated-data fraction; negative = not applicable
    uint64_t train_seed = 0;
    uint32_t iterations = 0;
};

struct ModelCheckpoint {
    DenoiserNet net;
    NoiseSchedule schedule;
    WorldConfig world;
    Provenance provenance;
    std::vector<float> loss_trace;  // per-iteration training loss
};

// Mean-squared training objective of one (z_t, t, prompt, noise) batch row —
// the quantity train() minimizes and reconstruction_loss() estimates.

ModelCheckpoint train(const WorldConfig& world, const std::vector<LabeledPair>& dataset,
                      const TrainConfig& config, uint64_t seed);

ModelCheckpoint finetune(const ModelCheckpoint& base,
                         const std::vector<LabeledPair>& dataset,
                         const TrainConfig& config, uint64_t seed);

// Noise prediction assembled from the x0 head and the checkpoint's schedule:
// eps_hat = zt/sqrt(1-abar_t) - (sqrt(abar_t)/sqrt(1-abar_t)) * predict_x0,
// in exactly the training loop's operation order.
Tensor predict_noise(const ModelCheckpoint& ckpt, const Tensor& zt, const Tensor& cond,
                     uint32_t t);

// Deterministic ancestral sampling: the initial state and every step's noise
// come from counters keyed by (noise_seed, t).
Tensor generate(const ModelCheckpoint& ckpt, const Prompt& prompt, uint64_t noise_seed);

// The shared-noise-path convention for attribution queries: both models in a
// comparison sample with the seed derived from the prompt itself.
uint64_t prompt_noise_seed(const Prompt& prompt);

// Monte-Carlo estimate of the denoising objective for (target, prompt).
float reconstruction_loss(const ModelCheckpoint& ckpt, const Prompt& prompt,
                          const Tensor& target, uint32_t trials, uint64_t seed);

// Stub-friendly core: `denoise(z_t, t)` predicts the injected noise.
using DenoiseFn = std::function<Tensor(const Tensor& zt, uint32_t t)>;
float reconstruction_loss_core(const DenoiseFn& denoise, const NoiseSchedule& schedule,
                               const Tensor& target, uint32_t trials, uint64_t seed);

}  // namespace provlab
