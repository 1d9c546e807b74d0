#include "provlab/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "provlab/autodiff.hpp"
#include "provlab/optim.hpp"
#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"

namespace provlab {

namespace {

void check_dataset(const WorldConfig& world, const std::vector<LabeledPair>& dataset) {
    if (dataset.empty()) {
        throw std::invalid_argument("training dataset is empty");
    }
    for (const LabeledPair& pair : dataset) {
        if (pair.image.numel() != world.pixel_count()) {
            throw std::invalid_argument(
                "dataset image has " + std::to_string(pair.image.numel()) +
                " pixels, world expects " + std::to_string(world.pixel_count()));
        }
    }
}

void run_training_loop(ModelCheckpoint& ckpt, const std::vector<LabeledPair>& dataset,
                       const TrainConfig& cfg, uint64_t seed) {
    DenoiserNet& net = ckpt.net;
    const NoiseSchedule& sched = ckpt.schedule;
    const size_t P = net.config().pixels;
    const size_t d_t = net.config().d_t;
    const size_t B = cfg.batch_size;
    if (B == 0) throw std::invalid_argument("batch size must be positive");

    Optimizer opt({.kind = OptimizerKind::Adam, .lr = cfg.lr});
    Rng rng(derive_seed(seed, "train-loop"));
    ckpt.loss_trace.reserve(ckpt.loss_trace.size() + cfg.iterations);

    for (uint32_t iter = 0; iter < cfg.iterations; ++iter) {
        std::vector<Prompt> prompts(B);
        Tensor zt({B, P}), eps({B, P}), temb({B, d_t});
        Tensor zt_scaled({B, P}), ratio({B, P});
        for (size_t b = 0; b < B; ++b) {
            size_t di = size_t(rng.next_below(dataset.size()));
            uint32_t t = 1 + uint32_t(rng.next_below(sched.t_count));
            prompts[b] = dataset[di].prompt;
            const Tensor& x0 = dataset[di].image;
            const float ab = sched.alpha_bar_at(t);
            const float c0 = std::sqrt(ab);
            const float c1 = std::sqrt(1.0f - ab);
            for (size_t i = 0; i < P; ++i) {
                float e = rng.next_gaussian();
                eps.at(b * P + i) = e;
                zt.at(b * P + i) = c0 * x0.at(i) + c1 * e;
                // constants of the noise-prediction assembly below
                zt_scaled.at(b * P + i) = zt.at(b * P + i) / c1;
                ratio.at(b * P + i) = -c0 / c1;
            }
            Tensor te = time_embedding(t, d_t);
            for (size_t i = 0; i < d_t; ++i) temb.at(b * d_t + i) = te.at(i);
        }

        Tape tape;
        DenoiserNet::TapeParams tp = net.stage(tape, true);
        NodeId cond = net.condition(tape, tp, prompts);
        NodeId x0_hat = tape.sigmoid(net.forward(tape, tp, tape.leaf(std::move(zt)), cond,
                                                 tape.leaf(std::move(temb))));
        // eps_hat = zt/c1 - (c0/c1)*x0_hat; the zt term carries no gradient,
        // so both coefficients enter as precomputed constants.
        NodeId pred = tape.add(tape.constant(std::move(zt_scaled)),
                               tape.mul(tape.constant(std::move(ratio)), x0_hat));
        NodeId loss = tape.squared_error(pred, tape.leaf(std::move(eps)));
        float loss_value = tape.value(loss).at(0);
        if (!std::isfinite(loss_value)) {
            throw std::runtime_error("non-finite training loss at iteration " +
                                     std::to_string(iter));
        }
        ckpt.loss_trace.push_back(loss_value);

        tape.backward(loss);
        std::vector<const Tensor*> grads;
        grads.reserve(tp.all.size());
        for (NodeId id : tp.all) grads.push_back(&tape.grad(id));
        opt.step(net.params(), grads);
    }
}

}  // namespace

ModelCheckpoint train(const WorldConfig& world, const std::vector<LabeledPair>& dataset,
                      const TrainConfig& config, uint64_t seed) {
    world.validate();
    check_dataset(world, dataset);
    TrainConfig cfg = config;
    cfg.arch.pixels = world.pixel_count();

    ModelCheckpoint ckpt;
    ckpt.net = DenoiserNet(cfg.arch, derive_seed(seed, "model-init"));
    ckpt.schedule = NoiseSchedule::linear(cfg.t_count);
    ckpt.world = world;
    ckpt.provenance.dataset_digest = dataset_digest(dataset);
    ckpt.provenance.train_seed = seed;
    ckpt.provenance.iterations = cfg.iterations;
    run_training_loop(ckpt, dataset, cfg, seed);
    return ckpt;
}

ModelCheckpoint finetune(const ModelCheckpoint& base,
                         const std::vector<LabeledPair>& dataset,
                         const TrainConfig& config, uint64_t seed) {
    check_dataset(base.world, dataset);
    ModelCheckpoint ckpt;
    ckpt.net = base.net;
    ckpt.schedule = base.schedule;
    ckpt.world = base.world;
    ckpt.provenance.dataset_digest = dataset_digest(dataset);
    ckpt.provenance.parent = checkpoint_digest(base);
    ckpt.provenance.train_seed = seed;
    ckpt.provenance.iterations = config.iterations;
    run_training_loop(ckpt, dataset, config, seed);
    return ckpt;
}

Tensor predict_noise(const ModelCheckpoint& ckpt, const Tensor& zt, const Tensor& cond,
                     uint32_t t) {
    const Tensor x0 = ckpt.net.predict_x0(zt, cond, t);
    const float ab = ckpt.schedule.alpha_bar_at(t);
    const float c0 = std::sqrt(ab);
    const float c1 = std::sqrt(1.0f - ab);
    const float ratio = -c0 / c1;
    // Two separately rounded elementwise passes, mirroring the training
    // tape's mul and add kernels so both assemblies agree bit for bit (a
    // single fused expression could contract to an fma and round once).
    Tensor prod(x0.shape());
    for (size_t i = 0; i < prod.numel(); ++i) prod.at(i) = ratio * x0.at(i);
    Tensor eps(x0.shape());
    for (size_t i = 0; i < eps.numel(); ++i) eps.at(i) = zt.at(i) / c1 + prod.at(i);
    return eps;
}

Tensor generate(const ModelCheckpoint& ckpt, const Prompt& prompt, uint64_t noise_seed) {
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        if (prompt.tokens[s] >= Vocabulary::kValuesPerSlot) {
            throw std::invalid_argument("invalid prompt token in slot " + std::to_string(s));
        }
    }
    const DenoiserNet& net = ckpt.net;
    const NoiseSchedule& sched = ckpt.schedule;
    const size_t P = net.config().pixels;

    Tensor cond = net.embed_condition(prompt);
    Tensor z({P});
    Rng init(derive_seed(noise_seed, "sample-init"));
    for (size_t i = 0; i < P; ++i) z.at(i) = init.next_gaussian();

    // Posterior mean computed from the range-clamped predicted x0 (the
    // classic clip_denoised form). The sigmoid head already confines the
    // prediction to (0,1), so the clamp is a guarantee rather than an active
    // correction: the trajectory stays anchored to the data cube and the
    // final output is clamped to [0,1] by construction.
    for (uint32_t t = sched.t_count; t >= 1; --t) {
        Tensor x0 = net.predict_x0(z, cond, t);
        const float ab = sched.alpha_bar_at(t);
        const float ab_prev = sched.alpha_bar_at(t - 1);
        const float alpha = sched.alpha_at(t);
        const float beta = sched.beta_at(t);
        if (t > 1) {
            const float x0_coef = std::sqrt(ab_prev) * beta / (1.0f - ab);
            const float zt_coef = std::sqrt(alpha) * (1.0f - ab_prev) / (1.0f - ab);
            const float sigma = std::sqrt(beta * (1.0f - ab_prev) / (1.0f - ab));
            Rng step(derive_seed(noise_seed, "sample-step", t));
            for (size_t i = 0; i < P; ++i) {
                const float x0c = std::clamp(x0.at(i), 0.0f, 1.0f);
                z.at(i) = x0_coef * x0c + zt_coef * z.at(i) + sigma * step.next_gaussian();
            }
        } else {
            // abar_0 = 1: the posterior mean collapses to the predicted x0.
            for (size_t i = 0; i < P; ++i) {
                z.at(i) = std::clamp(x0.at(i), 0.0f, 1.0f);
            }
        }
    }
    return z;
}

uint64_t prompt_noise_seed(const Prompt& prompt) {
    return prompt.hash();
}

float reconstruction_loss_core(const DenoiseFn& denoise, const NoiseSchedule& schedule,
                               const Tensor& target, uint32_t trials, uint64_t seed) {
    if (trials == 0) {
        throw std::invalid_argument("reconstruction loss needs at least one trial");
    }
    Rng rng(derive_seed(seed, "recon-loss"));
    double total = 0.0;
    for (uint32_t trial = 0; trial < trials; ++trial) {
        uint32_t t = 1 + uint32_t(rng.next_below(schedule.t_count));
        Tensor eps(target.shape());
        for (size_t i = 0; i < eps.numel(); ++i) eps.at(i) = rng.next_gaussian();
        Tensor zt = forward_noise(target, t, eps, schedule);
        Tensor pred = denoise(zt, t);
        if (!pred.same_shape(target)) {
            throw std::invalid_argument("denoiser returned shape " + pred.shape_str() +
                                        ", expected " + target.shape_str());
        }
        double acc = 0.0;
        for (size_t i = 0; i < eps.numel(); ++i) {
            double d = double(eps.at(i)) - double(pred.at(i));
            acc += d * d;
        }
        total += acc / double(eps.numel());
    }
    return float(total / double(trials));
}

float reconstruction_loss(const ModelCheckpoint& ckpt, const Prompt& prompt,
                          const Tensor& target, uint32_t trials, uint64_t seed) {
    if (target.numel() != ckpt.net.config().pixels) {
        throw std::invalid_argument("target has " + std::to_string(target.numel()) +
                                    " pixels, model expects " +
                                    std::to_string(ckpt.net.config().pixels));
    }
    Tensor cond = ckpt.net.embed_condition(prompt);
    DenoiseFn fn = [&](const Tensor& zt, uint32_t t) {
        return predict_noise(ckpt, zt, cond, t);
    };
    return reconstruction_loss_core(fn, ckpt.schedule, target, trials, seed);
}

}  // namespace provlab
