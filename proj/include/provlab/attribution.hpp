#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "provlab/diffusion.hpp"
#include "provlab/keyselect.hpp"
#include "provlab/sha256.hpp"
#include "provlab/simembed.hpp"
#include "provlab/world.hpp"

namespace provlab {

// Thresholds and sample counts for both verdict engines.
struct AttributionConfig {
    float delta0 = 0.15f;           // per-key distance threshold (calibratable)
    float delta = 0.5f;             // conf threshold for the instance verdict
    size_t key_count = 30;          // N, number of key samples
    size_t samples_per_prompt = 1;  // m; >1 averages distances over extra seeds

    void validate() const;  // 0<delta0<1, 0<delta<1, key_count>=1, m>=1
};

// How a suspect's training mixture is assembled. rho = generated/(own+generated).
struct SuspectSpec {
    size_t own_count = 0;        // real renders of prompts the builder holds
    size_t generated_count = 0;  // pairs whose image came from the source model
    uint64_t data_seed = 0;      // which prompts land on each side
};

// generated/(own+generated); errors when both counts are zero.
float suspect_rho(const SuspectSpec& spec);

// Assembles the mixed training set: `generated_count` prompts drawn from the
// source's training prompts with source-generated images (shared prompt-hash
// seeds), plus `own_count` public-partition renders. source may be null only
// when generated_count == 0 (an innocent suspect).
std::vector<LabeledPair> build_suspect_dataset(const SuspectSpec& spec,
                                               const ModelCheckpoint* source,
                                               const std::vector<LabeledPair>& source_data,
                                               const WorldConfig& world);

// Fine-tunes `base` on the mixed dataset and records rho in the provenance.
// `dataset_out`, when given, receives the mixed training set (for artifact
// persistence without rebuilding it).
ModelCheckpoint build_suspect(const ModelCheckpoint& base, const SuspectSpec& spec,
                              const ModelCheckpoint* source,
                              const std::vector<LabeledPair>& source_data,
                              const WorldConfig& world, const TrainConfig& finetune_cfg,
                              uint64_t train_seed,
                              std::vector<LabeledPair>* dataset_out = nullptr);

// Outcome of the instance-level probe: one distance per key sample, the
// fraction below delta0, and the strict-threshold verdict.
struct InstanceReport {
    std::vector<float> distances;  // d_k, in key-set order
    float conf = 0.0f;             // mean of indicator(d_k < delta0)
    bool verdict = false;          // conf > delta
    float delta0 = 0.0f;
    float delta = 0.0f;
    Digest source_digest{};
    Digest suspect_digest{};
    Digest keys_digest{};
    KeyStrategy strategy = KeyStrategy::Detect;
};

// Generates from both models under shared per-prompt noise seeds and compares
// outputs. keys.source_digest must match `source` (a zero digest — the
// source-agnostic random baseline — always matches).
InstanceReport instance_conf(const ModelCheckpoint& source, const ModelCheckpoint& suspect,
                             const KeySampleSet& keys, const AttributionConfig& cfg);

// true iff conf strictly exceeds delta.
bool instance_verdict(float conf, float delta);

// conf recomputed from a distance list (the recount path used by reports).
float conf_from_distances(const std::vector<float>& distances, float delta0);

// Distance histogram over the report's fixed bins, plus summary stats.
struct DistanceBins {
    // bin edges: 0-0.1, 0.1-0.15, 0.15-0.2, 0.25-0.3, 0.3-0.4; distances
    // outside every bin (including the 0.2-0.25 hole the report layout
    // inherits) only count toward the summary columns.
    std::array<float, 5> fraction{};
    float average = 0.0f;
    float best = 0.0f;  // smallest distance
    size_t count = 0;
};
DistanceBins bin_distances(const std::vector<float>& distances);

struct Delta0Calibration {
    float delta0 = 0.0f;
    bool separable = false;  // false -> best-F1 fallback was used
    std::vector<float> innocent_distances;
    std::vector<float> infringing_distances;
    DistanceBins innocent_bins;
    DistanceBins infringing_bins;
    std::string warning;  // nonempty iff !separable
};

// Pools per-key distances from both model populations and places delta0 in
// the gap between the infringing 90th percentile and the innocent 10th
// percentile (midpoint). When the populations overlap, falls back to the
// best-F1 threshold and says so.
Delta0Calibration calibrate_delta0(const ModelCheckpoint& source,
                                   const std::vector<const ModelCheckpoint*>& innocent,
                                   const std::vector<const ModelCheckpoint*>& infringing,
                                   const KeySampleSet& keys, const AttributionConfig& cfg);

// Two-row text table (innocent/infringing) over the fixed bins.
std::string histogram_table(const Delta0Calibration& cal);

// One auxiliary model trained under a known recipe.
struct ShadowModel {
    ModelCheckpoint ckpt;
    float rho = 0.0f;  // exact source-generated fraction of its data
    bool infringing = false;
    uint64_t seed = 0;
};

struct ShadowEnsemble {
    std::vector<ShadowModel> innocent;    // s models, zero source-generated tags
    std::vector<ShadowModel> infringing;  // s models, rho ~ U(0,1] each
    ModelCheckpoint innocent_reference;   // produced the innocent-generated images
    uint64_t seed = 0;
};

// Builds the labeled shadow population: collects ground-truth renders, source
// generations, and innocent-reference generations for the source's training
// prompts, then fine-tunes s shadows per class on n-pair mixtures.
ShadowEnsemble build_shadow_ensemble(const ModelCheckpoint& source,
                                     const std::vector<LabeledPair>& source_data,
                                     const ModelCheckpoint& base, const WorldConfig& world,
                                     size_t n, size_t s, const TrainConfig& finetune_cfg,
                                     uint64_t seed);

// Logistic regression over per-image features:
// [perceptual embedding (32) || 4x4 average-pooled pixels (16)].
inline constexpr size_t kDiscriminatorFeatures = 48;

struct Discriminator {
    Tensor w;  // [kDiscriminatorFeatures]
    float b = 0.0f;
    Digest keys_digest{};  // key set it was trained against
    uint64_t seed = 0;
};

// Feature vector for one image (its side must match the embedder's).
Tensor discriminator_features(const PerceptualEmbedder& embedder, const Tensor& image);

// sigma(w . f + b), in (0,1).
float discriminator_score(const Discriminator& d, const Tensor& features);

struct DiscriminatorSplit {
    // indices into a canonical shadow order: innocent 0..s-1, infringing s..2s-1
    std::vector<size_t> train_shadows;
    std::vector<size_t> test_shadows;
    float test_accuracy = 0.0f;  // image-level accuracy on held-out shadows
};

// Queries every shadow with the key prompts (shared seeds), labels images by
// shadow class, splits by shadow, and fits the regression by full-batch
// gradient descent. split = fraction of shadows (per class) used for training.
std::pair<Discriminator, DiscriminatorSplit> train_discriminator(
    const ShadowEnsemble& ensemble, const KeySampleSet& keys, float split, uint64_t seed);

// Fits the regression on explicit feature rows (the path the shadow pipeline
// uses; exposed for direct testing on synthetic features).
Discriminator fit_logistic(const std::vector<Tensor>& features,
                           const std::vector<int>& labels, uint32_t iterations, float lr);

struct StatisticalReport {
    std::vector<float> image_scores;  // per key prompt, key-set order
    float model_score = 0.0f;         // mean of image_scores
    int res = 0;                      // 1 iff model_score > 0.5
    Digest suspect_digest{};
    Digest keys_digest{};
};

// Queries the suspect with the key prompts and aggregates discriminator
// scores. The discriminator must have been trained with the same key set.
StatisticalReport statistical_verdict(const Discriminator& d, const ModelCheckpoint& suspect,
                                      const KeySampleSet& keys);

// Canonical digest of a key set (used for report provenance and the
// discriminator/keys pairing check).
Digest keyset_digest(const KeySampleSet& keys);

}  // namespace provlab
