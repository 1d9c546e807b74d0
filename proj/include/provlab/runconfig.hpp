#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "provlab/attribution.hpp"
#include "provlab/diffusion.hpp"
#include "provlab/evalharness.hpp"
#include "provlab/keyselect.hpp"
#include "provlab/world.hpp"

namespace provlab {

// Statistical-evaluation sizes (shadow pipeline + held-out population).
struct EvalConfig {
    size_t pairs = 120;      // training pairs per shadow / evaluation suspect
    size_t shadows = 6;      // shadow models per class
    size_t per_class = 12;   // held-out evaluation suspects per class
};

// Everything a run needs, parsed from a flat "key = value" file with dotted
// namespaces. Every key has a default, so an empty file is a valid config;
// unknown or duplicate keys are hard errors (silent typos are the main
// reproducibility killer).
//
// Grammar: one "key = value" per line; blank lines and lines starting with
// '#' are skipped; values are plain integers, %.9g floats, or comma-separated
// lists without spaces. serialize_runconfig emits every key in a fixed order,
// so parse-then-serialize is canonical.
//
// Seed discipline: the master seed fully determines every derived seed via
// per-stage counter hashing — derive_seed(master, stage_name[, counter]) with
// the stage names "cli-source-data", "cli-source-train", "cli-base-data",
// "cli-base-train", "cli-suspect-data", "cli-suspect-train", "cli-keys",
// "cli-plan", "cli-eval", "cli-delta0".
struct RunConfig {
    static TrainConfig finetune_default() {
        TrainConfig cfg;
        cfg.iterations = 8000;
        return cfg;
    }

    WorldConfig world = WorldConfig::standard(0);  // world.seed / world.image_side / world.style_amplitude
    size_t source_pairs = 160;    // source.pairs
    TrainConfig source_train;     // train.iterations/batch/lr/t_count/hidden/embed_dim/time_dim/layers
    size_t base_pairs = 60;       // base.pairs
    uint32_t base_iterations = 6000;  // base.iterations
    // Suspect training continues from the base checkpoint, so it needs far
    // fewer steps than from-scratch training (schedule/arch come from the base).
    TrainConfig finetune = finetune_default();  // finetune.iterations/batch/lr
    AttributionConfig attribution;    // attribution.delta0/delta/keys/samples_per_prompt
    KeyGenConfig keygen;          // keygen.seeds/steps/lr/trials/slot_constrained
    std::vector<float> plan_rhos = {0.3f, 0.5f, 0.7f, 1.0f};  // plan.rhos
    size_t plan_repetitions = 8;      // plan.repetitions
    size_t plan_suspect_pairs = 120;  // plan.suspect_pairs
    std::vector<size_t> nsweep_sizes = {5, 10, 20, 30};  // nsweep.sizes
    EvalConfig eval;              // eval.pairs/shadows/per_class
    uint64_t seed = 1;            // seed
    size_t jobs = 1;              // jobs
    std::string out_dir;          // out

    void validate() const;

    // The experiment plan assembled from the fields above (seed filled from
    // the master seed's "cli-plan" stage).
    ExperimentPlan plan() const;
};

RunConfig parse_runconfig(const std::string& text);
std::string serialize_runconfig(const RunConfig& config);

}  // namespace provlab
