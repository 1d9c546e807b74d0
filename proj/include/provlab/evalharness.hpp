#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "provlab/attribution.hpp"
#include "provlab/diffusion.hpp"
#include "provlab/keyselect.hpp"
#include "provlab/sha256.hpp"
#include "provlab/world.hpp"

namespace provlab {

// One evaluated model: its aggregate score, the ground-truth class, and the
// checkpoint it came from.
struct ScoredModel {
    float score = 0.0f;
    bool infringing = false;
    Digest digest{};
};
using ScoredPopulation = std::vector<ScoredModel>;

// Fraction of matching entries. Labels are 0/1.
float accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

// Probability that a uniformly random infringing score exceeds a uniformly
// random innocent score, ties counted one half (rank-based; matches the
// all-pairs loop exactly). Requires both classes present.
float auc(const ScoredPopulation& pop);

// Maximum true-positive rate over score thresholds whose empirical
// false-positive rate does not exceed fpr_cap (the all-positive threshold is
// always considered). Requires both classes present and 0 <= fpr_cap <= 1.
float tpr_at_fpr(const ScoredPopulation& pop, float fpr_cap);

// Grid description for the mixture sweep: which generated-data fractions to
// probe, how many independent suspects per cell, and how each suspect is
// built and judged.
struct ExperimentPlan {
    std::vector<float> rho_values{0.3f, 0.5f, 0.7f, 1.0f};
    size_t repetitions = 8;    // suspects per rho cell
    size_t suspect_pairs = 40; // fine-tuning pairs per suspect
    TrainConfig finetune;      // suspect fine-tuning recipe
    AttributionConfig attribution;
    uint64_t seed = 0;

    void validate() const;  // repetitions >= 1, pairs >= 1, rho in [0,1]
};

// One (rho, key-strategy) cell: per-suspect instance reports plus their
// mean/std conf. `rho` is the exact realized fraction (pair counts are
// integers), identical across strategies for the same column.
struct RhoCell {
    float rho = 0.0f;
    KeyStrategy strategy = KeyStrategy::Detect;
    float mean_conf = 0.0f;
    float std_conf = 0.0f;
    std::vector<InstanceReport> reports;  // one per repetition
};

struct RhoSweepResult {
    std::vector<RhoCell> cells;          // strategy-major, rho-minor
    std::vector<Digest> suspect_digests; // repetition-major per rho column
};

// Builds `repetitions` suspects per rho value (each one shared across all
// key sets), computes instance conf under every provided key set, and
// aggregates. Suspects are seeded from (plan.seed, column, repetition), so
// the result is byte-identical regardless of `jobs` (worker threads).
RhoSweepResult run_rho_sweep(const ModelCheckpoint& source,
                             const std::vector<LabeledPair>& source_data,
                             const ModelCheckpoint& base, const WorldConfig& world,
                             const std::vector<KeySampleSet>& key_sets,
                             const ExperimentPlan& plan, size_t jobs = 1);

struct NSweepRow {
    size_t n = 0;          // key-count prefix length
    float mean_conf = 0.0f;
};

struct NSweepResult {
    std::vector<InstanceReport> reports;  // full-length distances per suspect
    std::vector<NSweepRow> rows;
};

// Confidence as a function of key-set size: distances are computed once per
// suspect over the full ranked key list, and each row's conf re-counts the
// first n distances, so subsets are nested and rows are mutually comparable.
NSweepResult run_n_sweep(const ModelCheckpoint& source,
                         const std::vector<const ModelCheckpoint*>& suspects,
                         const KeySampleSet& keys, const std::vector<size_t>& n_values,
                         const AttributionConfig& cfg);

// Outcome of the population-level evaluation: the held-out scored models and
// the three summary metrics, plus enough digests to audit disjointness
// between discriminator training shadows and evaluation suspects.
struct StatisticalEval {
    ScoredPopulation population;
    float acc = 0.0f;
    float auc_score = 0.0f;
    float tpr_at_10fpr = 0.0f;
    float shadow_test_accuracy = 0.0f;  // image-level, held-out shadows
    std::vector<Digest> shadow_digests; // every ensemble member
    std::vector<StatisticalReport> reports;  // per evaluated model
    Discriminator discriminator;        // the fitted scorer, reusable downstream
};

// Full statistical pipeline: build the shadow ensemble (s per class, n pairs
// each), fit the discriminator on the key prompts, then score
// `eval_per_class` freshly built innocent and infringing suspects that were
// never part of the ensemble. Infringing evaluation suspects draw their
// generated-data fraction uniformly from (0,1]; innocent ones fine-tune on
// fresh renders only.
StatisticalEval run_statistical_eval(const ModelCheckpoint& source,
                                     const std::vector<LabeledPair>& source_data,
                                     const ModelCheckpoint& base, const WorldConfig& world,
                                     size_t n, size_t s, size_t eval_per_class,
                                     const KeySampleSet& keys,
                                     const TrainConfig& finetune_cfg, uint64_t seed,
                                     size_t jobs = 1);

// CSV renderings (one row per cell; stable column order; '\n' line ends).
std::string rho_sweep_csv(const RhoSweepResult& result);
std::string n_sweep_csv(const NSweepResult& result);
std::string statistical_csv(const StatisticalEval& eval);

}  // namespace provlab
