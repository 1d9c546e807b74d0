#include "provlab/keyselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "provlab/autodiff.hpp"
#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"
#include "provlab/simembed.hpp"

namespace provlab {

const char* strategy_name(KeyStrategy s) {
    switch (s) {
        case KeyStrategy::Detect: return "detect";
        case KeyStrategy::Generate: return "generate";
        case KeyStrategy::Random: return "random";
    }
    throw std::invalid_argument("unknown key strategy");
}

namespace {

void check_n(size_t N, size_t available) {
    if (N == 0) throw std::invalid_argument("key sample count must be positive");
    if (N > available) {
        throw std::invalid_argument("key sample count " + std::to_string(N) +
                                    " exceeds available candidates " +
                                    std::to_string(available));
    }
}

// Distinct dataset indices, uniform without replacement (partial
// Fisher-Yates over an index vector).
std::vector<size_t> draw_indices(size_t total, size_t count, Rng& rng) {
    std::vector<size_t> idx(total);
    std::iota(idx.begin(), idx.end(), size_t(0));
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + size_t(rng.next_below(uint64_t(total - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

}  // namespace

std::vector<size_t> top_n_by_score(const std::vector<float>& scores,
                                   const std::vector<Prompt>& prompts, size_t n) {
    if (scores.size() != prompts.size()) {
        throw std::invalid_argument("scores and prompts must pair up");
    }
    check_n(n, scores.size());
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return prompts[a] < prompts[b];
    });
    order.resize(n);
    return order;
}

KeySampleSet detect_key_samples(const ModelCheckpoint& source,
                                const std::vector<LabeledPair>& dataset, size_t N) {
    check_n(N, dataset.size());
    PerceptualEmbedder embedder(source.world.image_side);

    std::vector<float> sims(dataset.size());
    std::vector<Prompt> prompts(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
        prompts[i] = dataset[i].prompt;
        Tensor img = generate(source, dataset[i].prompt,
                              prompt_noise_seed(dataset[i].prompt));
        sims[i] = perceptual_similarity(embedder, img, dataset[i].image);
    }

    KeySampleSet set;
    set.strategy = KeyStrategy::Detect;
    set.source_digest = checkpoint_digest(source);
    set.dataset_digest = dataset_digest(dataset);
    set.selection_seed = 0;  // detection is deterministic
    set.samples.reserve(N);
    for (size_t i : top_n_by_score(sims, prompts, N)) {
        set.samples.push_back(
            {dataset[i].prompt, dataset[i].image, sims[i], KeyStrategy::Detect});
    }
    return set;
}

float prompt_embedding_loss_grad(const ModelCheckpoint& source, const Tensor& c,
                                 const Tensor& target, uint32_t trials, uint64_t seed,
                                 Tensor* grad_out) {
    const DenoiserNet& net = source.net;
    const size_t S = Vocabulary::kSlots;
    const size_t P = net.config().pixels;
    const size_t d_t = net.config().d_t;
    if (c.shape() != std::vector<size_t>{S, net.config().d_e}) {
        throw std::invalid_argument("condition embedding has shape " + c.shape_str() +
                                    ", expected [slots, d_e]");
    }
    if (target.numel() != P) {
        throw std::invalid_argument("target has " + std::to_string(target.numel()) +
                                    " pixels, model expects " + std::to_string(P));
    }
    if (trials == 0) throw std::invalid_argument("need at least one trial");

    const NoiseSchedule& sched = source.schedule;
    Rng rng(seed);
    const size_t B = trials;
    Tensor zt({B, P}), eps({B, P}), temb({B, d_t});
    Tensor zt_scaled({B, P}), ratio({B, P});
    for (size_t b = 0; b < B; ++b) {
        uint32_t t = 1 + uint32_t(rng.next_below(sched.t_count));
        const float ab = sched.alpha_bar_at(t);
        const float c0 = std::sqrt(ab), c1 = std::sqrt(1.0f - ab);
        for (size_t i = 0; i < P; ++i) {
            float e = rng.next_gaussian();
            eps.at(b * P + i) = e;
            zt.at(b * P + i) = c0 * target.at(i) + c1 * e;
            zt_scaled.at(b * P + i) = zt.at(b * P + i) / c1;
            ratio.at(b * P + i) = -c0 / c1;
        }
        Tensor te = time_embedding(t, d_t);
        for (size_t i = 0; i < d_t; ++i) temb.at(b * d_t + i) = te.at(i);
    }

    Tape tape;
    DenoiserNet::TapeParams tp = net.stage(tape, false);  // parameters frozen
    NodeId c_node = tape.leaf(c, grad_out != nullptr);
    // Mean over slots, replicated per trial row: pool[B,S] * c[S,d_e].
    Tensor pool({B, S});
    for (size_t i = 0; i < B * S; ++i) pool.at(i) = 1.0f / float(S);
    NodeId cond = tape.matmul(tape.constant(std::move(pool)), c_node);
    NodeId x0_hat = tape.sigmoid(net.forward(tape, tp, tape.leaf(std::move(zt)), cond,
                                             tape.leaf(std::move(temb))));
    // The training loop's noise-prediction assembly, with the embedding as
    // the only differentiable input.
    NodeId pred = tape.add(tape.constant(std::move(zt_scaled)),
                           tape.mul(tape.constant(std::move(ratio)), x0_hat));
    NodeId loss = tape.squared_error(pred, tape.leaf(std::move(eps)));
    float loss_value = tape.value(loss).at(0);
    if (!std::isfinite(loss_value)) {
        throw std::runtime_error("non-finite prompt-optimization loss");
    }
    if (grad_out != nullptr) {
        tape.backward(loss);
        *grad_out = tape.grad(c_node);
    }
    return loss_value;
}

PromptOptimization optimize_prompt_embedding(const ModelCheckpoint& source,
                                             const Prompt& seed_prompt,
                                             const Tensor& target, uint32_t steps,
                                             float lr, uint32_t mc_trials,
                                             uint64_t seed) {
    const DenoiserNet& net = source.net;
    const size_t S = Vocabulary::kSlots;
    const size_t d_e = net.config().d_e;

    // Start from the seed prompt's embedding rows.
    const Tensor& table = *net.params()[0];
    Tensor c({S, d_e});
    std::vector<size_t> ids = seed_prompt.token_ids();
    for (size_t s = 0; s < S; ++s) {
        for (size_t j = 0; j < d_e; ++j) {
            c.at(s * d_e + j) = table.at(ids[s] * d_e + j);
        }
    }

    PromptOptimization result;
    result.loss_trace.reserve(steps);
    for (uint32_t step = 0; step < steps; ++step) {
        Tensor grad;
        float loss = prompt_embedding_loss_grad(source, c, target, mc_trials,
                                                derive_seed(seed, "prompt-opt", step),
                                                &grad);
        result.loss_trace.push_back(loss);
        for (size_t i = 0; i < c.numel(); ++i) {
            c.at(i) -= lr * grad.at(i);
        }
    }
    result.c = std::move(c);
    return result;
}

TokenProjection project_to_tokens(const DenoiserNet& net, const Tensor& c_prime,
                                  const Prompt& seed_prompt, bool slot_constrained) {
    const size_t S = Vocabulary::kSlots;
    const size_t K = Vocabulary::kValuesPerSlot;
    const size_t d_e = net.config().d_e;
    if (c_prime.shape() != std::vector<size_t>{S, d_e}) {
        throw std::invalid_argument("embedding has shape " + c_prime.shape_str() +
                                    ", expected [slots, d_e]");
    }
    const Tensor& table = *net.params()[0];

    TokenProjection out;
    out.c_star = Tensor({S, d_e});
    out.hamming = 0;
    for (size_t s = 0; s < S; ++s) {
        // Candidate token ids: this slot's values, or every value token.
        size_t first = slot_constrained ? Vocabulary::token_id(s, 0) : 0;
        size_t last = slot_constrained ? first + K : S * K;  // exclusive; pad excluded
        size_t best_id = first;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (size_t id = first; id < last; ++id) {
            double d2 = 0.0;
            for (size_t j = 0; j < d_e; ++j) {
                double d = double(c_prime.at(s * d_e + j)) - double(table.at(id * d_e + j));
                d2 += d * d;
            }
            if (d2 < best_d2) {
                best_d2 = d2;
                best_id = id;
            }
        }
        out.prompt.tokens[s] = uint8_t(best_id % K);
        for (size_t j = 0; j < d_e; ++j) {
            out.c_star.at(s * d_e + j) = table.at(best_id * d_e + j);
        }
        if (out.prompt.tokens[s] != seed_prompt.tokens[s]) ++out.hamming;
    }
    return out;
}

KeySampleSet generate_key_samples(const ModelCheckpoint& source,
                                  const std::vector<LabeledPair>& dataset, size_t N,
                                  const KeyGenConfig& cfg, uint64_t seed) {
    check_n(N, dataset.size());
    size_t seeds_count = cfg.seeds_count == 0 ? 4 * N : cfg.seeds_count;
    if (seeds_count < N) {
        throw std::invalid_argument("seeds_count " + std::to_string(seeds_count) +
                                    " is smaller than N " + std::to_string(N));
    }
    seeds_count = std::min(seeds_count, dataset.size());

    Rng rng(derive_seed(seed, "key-gen"));
    std::vector<size_t> picks = draw_indices(dataset.size(), seeds_count, rng);

    struct Candidate {
        size_t order;  // draw order, the last tie-break
        Prompt prompt;
        const Tensor* reference;
        size_t hamming;
        float final_loss;
    };
    std::vector<Candidate> cands;
    cands.reserve(seeds_count);
    for (size_t i = 0; i < picks.size(); ++i) {
        const LabeledPair& pair = dataset[picks[i]];
        // Seed by dataset index, not draw position: a candidate's optimization
        // is the same whichever order the draw visits it in.
        PromptOptimization opt =
            optimize_prompt_embedding(source, pair.prompt, pair.image, cfg.steps,
                                      cfg.lr, cfg.mc_trials,
                                      derive_seed(seed, "key-gen-opt", picks[i]));
        TokenProjection proj =
            project_to_tokens(source.net, opt.c, pair.prompt, cfg.slot_constrained);
        float final_loss = opt.loss_trace.empty()
                               ? std::numeric_limits<float>::infinity()
                               : opt.loss_trace.back();
        cands.push_back({i, proj.prompt, &pair.image, proj.hamming, final_loss});
    }

    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.hamming != b.hamming) return a.hamming < b.hamming;
        if (a.final_loss != b.final_loss) return a.final_loss < b.final_loss;
        return a.order < b.order;
    });

    KeySampleSet set;
    set.strategy = KeyStrategy::Generate;
    set.source_digest = checkpoint_digest(source);
    set.dataset_digest = dataset_digest(dataset);
    set.selection_seed = seed;
    set.samples.reserve(N);
    for (size_t k = 0; k < N; ++k) {
        set.samples.push_back({cands[k].prompt, *cands[k].reference,
                               float(cands[k].hamming), KeyStrategy::Generate});
    }
    return set;
}

KeySampleSet random_key_samples(const std::vector<LabeledPair>& dataset, size_t N,
                                uint64_t seed) {
    check_n(N, dataset.size());
    Rng rng(derive_seed(seed, "key-random"));
    std::vector<size_t> picks = draw_indices(dataset.size(), N, rng);

    KeySampleSet set;
    set.strategy = KeyStrategy::Random;
    set.dataset_digest = dataset_digest(dataset);
    set.selection_seed = seed;
    set.samples.reserve(N);
    for (size_t i : picks) {
        set.samples.push_back({dataset[i].prompt, dataset[i].image, 0.0f,
                               KeyStrategy::Random});
    }
    return set;
}

}  // namespace provlab
