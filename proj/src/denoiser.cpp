#include "provlab/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "provlab/optim.hpp"
#include "provlab/rng.hpp"
#include "provlab/schedule.hpp"

namespace provlab {

DenoiserNet::DenoiserNet(DenoiserConfig cfg, uint64_t init_seed) : cfg_(cfg) {
    if (cfg_.pixels == 0 || cfg_.hidden == 0 || cfg_.layers == 0 || cfg_.d_e == 0) {
        throw std::invalid_argument("denoiser dimensions must be positive");
    }
    Rng rng(derive_seed(init_seed, "denoiser-init"));
    // Unit-scale embedding rows keep distinct prompts distinct after slot
    // pooling; He-scaled hidden layers keep the silu trunk nonlinear from the
    // first step; the zero output stage starts the x0 logits at exactly zero,
    // so an untrained net predicts a flat mid-gray image instead of init
    // noise.
    embed_ = Tensor({cfg_.vocab, cfg_.d_e});
    init_gaussian(embed_, 1.0f, rng);

    for (size_t l = 0; l < cfg_.layers; ++l) {
        const size_t in = cfg_.stage_input_width(l);
        Tensor w({in, cfg_.hidden}), b({cfg_.hidden});
        init_he_uniform(w, in, rng);
        w_.push_back(std::move(w));
        b_.push_back(std::move(b));
    }
    Tensor w({cfg_.stage_input_width(cfg_.layers), cfg_.pixels}), b({cfg_.pixels});
    w_.push_back(std::move(w));
    b_.push_back(std::move(b));
}

DenoiserNet::DenoiserNet(DenoiserConfig cfg, Tensor embed, std::vector<Tensor> w,
                         std::vector<Tensor> b)
    : cfg_(cfg), embed_(std::move(embed)), w_(std::move(w)), b_(std::move(b)) {
    auto expect = [](const Tensor& t, std::vector<size_t> shape, const char* which) {
        if (t.shape() != shape) {
            throw std::invalid_argument(std::string("denoiser ") + which + " has shape " +
                                        t.shape_str() + ", expected " +
                                        shape_to_string(shape));
        }
    };
    expect(embed_, {cfg_.vocab, cfg_.d_e}, "embedding table");
    if (w_.size() != cfg_.layers + 1 || b_.size() != cfg_.layers + 1) {
        throw std::invalid_argument("denoiser has wrong layer count");
    }
    for (size_t l = 0; l < w_.size(); ++l) {
        size_t out = (l < cfg_.layers) ? cfg_.hidden : cfg_.pixels;
        expect(w_[l], {cfg_.stage_input_width(l), out}, "trunk weight");
        expect(b_[l], {out}, "trunk bias");
    }
}

std::vector<Tensor*> DenoiserNet::params() {
    std::vector<Tensor*> out{&embed_};
    for (size_t l = 0; l < w_.size(); ++l) {
        out.push_back(&w_[l]);
        out.push_back(&b_[l]);
    }
    return out;
}

std::vector<const Tensor*> DenoiserNet::params() const {
    std::vector<const Tensor*> out{&embed_};
    for (size_t l = 0; l < w_.size(); ++l) {
        out.push_back(&w_[l]);
        out.push_back(&b_[l]);
    }
    return out;
}

DenoiserNet::TapeParams DenoiserNet::stage(Tape& tape, bool requires_grad) const {
    TapeParams tp;
    tp.embed = tape.leaf(embed_, requires_grad);
    tp.all.push_back(tp.embed);
    for (size_t l = 0; l < w_.size(); ++l) {
        tp.w.push_back(tape.leaf(w_[l], requires_grad));
        tp.b.push_back(tape.leaf(b_[l], requires_grad));
        tp.all.push_back(tp.w.back());
        tp.all.push_back(tp.b.back());
    }
    return tp;
}

NodeId DenoiserNet::condition(Tape& tape, const TapeParams& tp,
                              const std::vector<Prompt>& prompts) const {
    if (prompts.empty()) {
        throw std::invalid_argument("condition needs at least one prompt");
    }
    const size_t B = prompts.size();
    const size_t S = Vocabulary::kSlots;
    std::vector<size_t> ids;
    ids.reserve(B * S);
    for (const Prompt& p : prompts) {
        for (size_t id : p.token_ids()) ids.push_back(id);
    }
    NodeId rows = tape.gather_rows(tp.embed, std::move(ids));  // [B*S, d_e]
    // mean over each prompt's S rows via a constant pooling matrix [B, B*S]
    Tensor pool({B, B * S});
    const float inv = 1.0f / float(S);
    for (size_t i = 0; i < B; ++i) {
        for (size_t j = 0; j < S; ++j) pool.at(i, i * S + j) = inv;
    }
    return tape.matmul(tape.constant(std::move(pool)), rows);  // [B, d_e]
}

NodeId DenoiserNet::forward(Tape& tape, const TapeParams& tp, NodeId zt, NodeId cond,
                            NodeId temb) const {
    const Tensor& z = tape.value(zt);
    if (z.rank() != 2 || z.dim(1) != cfg_.pixels) {
        throw std::invalid_argument("zt must be [batch, " + std::to_string(cfg_.pixels) +
                                    "], got " + z.shape_str());
    }
    // The same [time | condition] block rides along into every stage.
    NodeId extras = tape.concat_cols(temb, cond);
    NodeId x = zt;
    for (size_t l = 0; l < w_.size(); ++l) {
        x = tape.affine(tape.concat_cols(x, extras), tp.w[l], tp.b[l]);
        if (l + 1 < w_.size()) x = tape.silu(x);
    }
    return x;
}

Tensor DenoiserNet::embed_condition(const Prompt& prompt) const {
    // Mirrors the tape path bit for bit: same 1/S coefficient, same
    // accumulation order as the pooling matmul.
    Tensor cond({cfg_.d_e});
    const float inv = 1.0f / float(Vocabulary::kSlots);
    for (size_t id : prompt.token_ids()) {
        const float* row = embed_.data() + id * cfg_.d_e;
        for (size_t k = 0; k < cfg_.d_e; ++k) {
            cond.at(k) += inv * row[k];
        }
    }
    return cond;
}

Tensor DenoiserNet::predict_x0(const Tensor& zt, const Tensor& cond, uint32_t t) const {
    if (zt.numel() != cfg_.pixels) {
        throw std::invalid_argument("zt has " + std::to_string(zt.numel()) +
                                    " values, expected " + std::to_string(cfg_.pixels));
    }
    if (cond.numel() != cfg_.d_e) {
        throw std::invalid_argument("condition has " + std::to_string(cond.numel()) +
                                    " values, expected " + std::to_string(cfg_.d_e));
    }
    Tensor temb = time_embedding(t, cfg_.d_t);
    // Stage input assembled exactly like the tape path's
    // concat_cols(x, concat_cols(temb, cond)): [activations | temb | cond].
    auto with_extras = [&](const Tensor& act) {
        Tensor x({1, act.numel() + cfg_.d_t + cfg_.d_e});
        size_t pos = 0;
        for (size_t i = 0; i < act.numel(); ++i) x.at(pos++) = act.at(i);
        for (size_t i = 0; i < cfg_.d_t; ++i) x.at(pos++) = temb.at(i);
        for (size_t i = 0; i < cfg_.d_e; ++i) x.at(pos++) = cond.at(i);
        return x;
    };

    Tensor act = zt;
    Tensor out;
    for (size_t l = 0; l < w_.size(); ++l) {
        Tensor x = with_extras(act);
        kernels::affine(x, w_[l], b_[l], out);
        if (l + 1 < w_.size()) {
            for (size_t i = 0; i < out.numel(); ++i) {
                out.at(i) = kernels::silu_scalar(out.at(i));
            }
        }
        act = out;
    }
    Tensor x0({cfg_.pixels});
    for (size_t i = 0; i < cfg_.pixels; ++i) {
        x0.at(i) = 1.0f / (1.0f + std::exp(-act.at(i)));
    }
    return x0;
}

}  // namespace provlab
