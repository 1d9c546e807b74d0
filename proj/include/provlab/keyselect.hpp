#pragma once

#include <cstdint>
#include <vector>

#include "provlab/diffusion.hpp"
#include "provlab/sha256.hpp"
#include "provlab/tensor.hpp"
#include "provlab/world.hpp"

namespace provlab {

// How a key-sample set was chosen: by detection (rank training pairs by how
// well the source reproduces them), by generation (gradient-search prompt
// embeddings against the source), or uniformly at random (baseline).
enum class KeyStrategy : uint8_t {
    Detect = 0,
    Generate = 1,
    Random = 2,
};

const char* strategy_name(KeyStrategy s);

// One attribution probe: a prompt plus the reference image it is expected to
// reproduce. `score` is the selection statistic — perceptual similarity for
// Detect (sorted descending), token-hamming distance for Generate (sorted
// ascending), 0 for Random (draw order).
struct KeySample {
    Prompt prompt;
    Tensor reference;
    float score = 0.0f;
    KeyStrategy strategy = KeyStrategy::Detect;
};

struct KeySampleSet {
    std::vector<KeySample> samples;
    // Digest of the source checkpoint the set was prepared against; the
    // all-zero digest marks a source-agnostic set (the random baseline).
    Digest source_digest{};
    // Digest of the dataset the samples were selected from (provenance).
    Digest dataset_digest{};
    KeyStrategy strategy = KeyStrategy::Detect;
    uint64_t selection_seed = 0;
};

// Deterministic Top-N ranking used by the detection strategy: positions of
// the n highest scores, ties preferring the lexically smaller prompt, then
// the earlier position. scores and prompts must have equal length >= n.
std::vector<size_t> top_n_by_score(const std::vector<float>& scores,
                                   const std::vector<Prompt>& prompts, size_t n);

// Strategy 1: generate every dataset prompt from the source under the shared
// prompt-hash noise seed, score perceptual similarity against the pair's
// ground-truth image, and keep the N best. Ties break toward the prompt with
// lower token order, then dataset order. Selection is fully deterministic.
KeySampleSet detect_key_samples(const ModelCheckpoint& source,
                                const std::vector<LabeledPair>& dataset, size_t N);

// Monte-Carlo denoising loss of `target` under condition embedding `c`
// ([slots, d_e]; the trunk sees the mean over slots), with its gradient
// w.r.t. c. Model parameters are read-only. Draws `trials` (t, noise) samples
// from `seed`; same seed, same value.
float prompt_embedding_loss_grad(const ModelCheckpoint& source, const Tensor& c,
                                 const Tensor& target, uint32_t trials, uint64_t seed,
                                 Tensor* grad_out);

struct PromptOptimization {
    Tensor c;                       // final embedding, [slots, d_e]
    std::vector<float> loss_trace;  // one Monte-Carlo loss per step
};

// Strategy 2 inner loop: starting from the seed prompt's embedding rows, run
// `steps` plain gradient steps on the Monte-Carlo loss w.r.t. the embedding
// only (fresh noise draws each step). The model is never modified.
PromptOptimization optimize_prompt_embedding(const ModelCheckpoint& source,
                                             const Prompt& seed_prompt,
                                             const Tensor& target, uint32_t steps,
                                             float lr, uint32_t mc_trials,
                                             uint64_t seed);

struct TokenProjection {
    Prompt prompt;   // nearest legal token per slot
    Tensor c_star;   // the chosen embedding rows, [slots, d_e]
    size_t hamming;  // number of slots whose token differs from the seed prompt
};

// Snap a continuous slot embedding back onto the vocabulary: per slot, the
// nearest table row by L2. `slot_constrained` (default) searches only the
// slot's own value tokens, keeping the result grammatical; unconstrained
// search ranges over every value token in the table and stores the winning
// row's value index in the slot.
TokenProjection project_to_tokens(const DenoiserNet& net, const Tensor& c_prime,
                                  const Prompt& seed_prompt,
                                  bool slot_constrained = true);

struct KeyGenConfig {
    size_t seeds_count = 0;  // 0 means 4*N
    uint32_t steps = 200;
    float lr = 0.05f;
    uint32_t mc_trials = 8;
    bool slot_constrained = true;
};

// Strategy 2: optimize prompt embeddings for `seeds_count` randomly drawn
// dataset pairs (drawn without replacement, so the count is capped at the
// dataset size), project each back to tokens, and keep the N candidates with
// the smallest hamming distance (ties toward lower final loss, then draw
// order). The reference image is the optimization target.
KeySampleSet generate_key_samples(const ModelCheckpoint& source,
                                  const std::vector<LabeledPair>& dataset, size_t N,
                                  const KeyGenConfig& cfg, uint64_t seed);

// Baseline: N dataset pairs uniformly without replacement.
KeySampleSet random_key_samples(const std::vector<LabeledPair>& dataset, size_t N,
                                uint64_t seed);

}  // namespace provlab
