#include "provlab/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"

namespace provlab {

namespace {

void append_u64(Sha256& h, uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = uint8_t(v >> (8 * i));
    h.update(b, 8);
}

void append_f32(Sha256& h, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = uint8_t(bits >> (8 * i));
    h.update(b, 4);
}

// `count` distinct indices in [0, n), in draw order.
std::vector<size_t> draw_without_replacement(size_t n, size_t count, uint64_t seed) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t(0));
    Rng rng(seed);
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + size_t(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

float sigmoid(double z) { return float(1.0 / (1.0 + std::exp(-z))); }

// Nearest-rank percentile of an ascending-sorted list.
float percentile_sorted(const std::vector<float>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile of empty list");
    size_t rank = size_t(std::ceil(p / 100.0 * double(sorted.size())));
    rank = std::max<size_t>(rank, 1);
    rank = std::min(rank, sorted.size());
    return sorted[rank - 1];
}

}  // namespace

void AttributionConfig::validate() const {
    if (!(delta0 > 0.0f && delta0 < 1.0f)) {
        throw std::invalid_argument("delta0 must lie in (0,1), got " + std::to_string(delta0));
    }
    if (!(delta > 0.0f && delta < 1.0f)) {
        throw std::invalid_argument("delta must lie in (0,1), got " + std::to_string(delta));
    }
    if (key_count < 1) throw std::invalid_argument("key_count must be at least 1");
    if (samples_per_prompt < 1) {
        throw std::invalid_argument("samples_per_prompt must be at least 1");
    }
}

float suspect_rho(const SuspectSpec& spec) {
    const size_t total = spec.own_count + spec.generated_count;
    if (total == 0) throw std::invalid_argument("suspect needs at least one training pair");
    return float(double(spec.generated_count) / double(total));
}

std::vector<LabeledPair> build_suspect_dataset(const SuspectSpec& spec,
                                               const ModelCheckpoint* source,
                                               const std::vector<LabeledPair>& source_data,
                                               const WorldConfig& world) {
    suspect_rho(spec);  // validates the counts

    if (spec.generated_count > 0) {
        if (source == nullptr) {
            throw std::invalid_argument(
                "suspect mixes generated data but no source model was given");
        }
        if (source->world.pixel_count() != world.pixel_count()) {
            throw std::invalid_argument("source and suspect worlds disagree on image size");
        }
        if (spec.generated_count > source_data.size()) {
            throw std::invalid_argument("generated_count " +
                                        std::to_string(spec.generated_count) +
                                        " exceeds the source's training set (" +
                                        std::to_string(source_data.size()) + ")");
        }
    }

    std::vector<LabeledPair> out;
    out.reserve(spec.generated_count + spec.own_count);

    // Generated side: prompts are drawn from the source's training prompts —
    // the data an adversary can actually harvest from the source — and the
    // images come from the source under the shared per-prompt seeds.
    if (spec.generated_count > 0) {
        std::vector<size_t> picks =
            draw_without_replacement(source_data.size(), spec.generated_count,
                                     derive_seed(spec.data_seed, "suspect-gen"));
        for (size_t i : picks) {
            const Prompt& p = source_data[i].prompt;
            out.push_back({p, generate(*source, p, prompt_noise_seed(p)),
                           Origin::SourceGenerated});
        }
    }

    // Own side: ordinary public-partition renders.
    if (spec.own_count > 0) {
        std::vector<LabeledPair> own = build_dataset(
            world, spec.own_count, Partition::Public, derive_seed(spec.data_seed, "suspect-own"));
        out.insert(out.end(), own.begin(), own.end());
    }
    return out;
}

ModelCheckpoint build_suspect(const ModelCheckpoint& base, const SuspectSpec& spec,
                              const ModelCheckpoint* source,
                              const std::vector<LabeledPair>& source_data,
                              const WorldConfig& world, const TrainConfig& finetune_cfg,
                              uint64_t train_seed,
                              std::vector<LabeledPair>* dataset_out) {
    std::vector<LabeledPair> mixed = build_suspect_dataset(spec, source, source_data, world);
    ModelCheckpoint ckpt = finetune(base, mixed, finetune_cfg, train_seed);
    ckpt.provenance.rho = suspect_rho(spec);
    if (dataset_out) *dataset_out = std::move(mixed);
    return ckpt;
}

float conf_from_distances(const std::vector<float>& distances, float delta0) {
    if (distances.empty()) throw std::invalid_argument("conf of an empty distance list");
    size_t below = 0;
    for (float d : distances) {
        if (d < delta0) ++below;
    }
    return float(below) / float(distances.size());
}

bool instance_verdict(float conf, float delta) {
    if (!(conf >= 0.0f && conf <= 1.0f)) {
        throw std::invalid_argument("conf must lie in [0,1], got " + std::to_string(conf));
    }
    return conf > delta;
}

namespace {

// Shared-seed generations of the source for every (key, extra-sample) slot;
// the cache lets population scans reuse them across many suspects.
std::vector<Tensor> source_key_images(const ModelCheckpoint& source, const KeySampleSet& keys,
                                      size_t m) {
    std::vector<Tensor> out;
    out.reserve(keys.samples.size() * m);
    for (const KeySample& k : keys.samples) {
        for (size_t j = 0; j < m; ++j) {
            out.push_back(generate(source, k.prompt, prompt_noise_seed(k.prompt) + j));
        }
    }
    return out;
}

InstanceReport instance_conf_impl(const ModelCheckpoint& source,
                                  const ModelCheckpoint& suspect, const KeySampleSet& keys,
                                  const AttributionConfig& cfg,
                                  const std::vector<Tensor>* src_imgs) {
    cfg.validate();
    if (keys.samples.empty()) throw std::invalid_argument("empty key set");
    if (!keys.source_digest.is_zero() &&
        keys.source_digest != checkpoint_digest(source)) {
        throw std::invalid_argument(
            "key set was selected against a different source checkpoint");
    }
    const size_t m = cfg.samples_per_prompt;
    if (src_imgs != nullptr && src_imgs->size() != keys.samples.size() * m) {
        throw std::invalid_argument("cached source image count does not match keys");
    }

    InstanceReport rep;
    rep.delta0 = cfg.delta0;
    rep.delta = cfg.delta;
    rep.source_digest = checkpoint_digest(source);
    rep.suspect_digest = checkpoint_digest(suspect);
    rep.keys_digest = keyset_digest(keys);
    rep.strategy = keys.strategy;
    rep.distances.reserve(keys.samples.size());
    for (size_t ki = 0; ki < keys.samples.size(); ++ki) {
        const KeySample& k = keys.samples[ki];
        double acc = 0.0;
        for (size_t j = 0; j < m; ++j) {
            const uint64_t seed = prompt_noise_seed(k.prompt) + j;
            Tensor sus = generate(suspect, k.prompt, seed);
            if (src_imgs != nullptr) {
                acc += recon_distance((*src_imgs)[ki * m + j], sus);
            } else {
                acc += recon_distance(generate(source, k.prompt, seed), sus);
            }
        }
        rep.distances.push_back(float(acc / double(m)));
    }
    rep.conf = conf_from_distances(rep.distances, cfg.delta0);
    rep.verdict = instance_verdict(rep.conf, cfg.delta);
    return rep;
}

}  // namespace

InstanceReport instance_conf(const ModelCheckpoint& source, const ModelCheckpoint& suspect,
                             const KeySampleSet& keys, const AttributionConfig& cfg) {
    return instance_conf_impl(source, suspect, keys, cfg, nullptr);
}

DistanceBins bin_distances(const std::vector<float>& distances) {
    DistanceBins bins;
    bins.count = distances.size();
    if (distances.empty()) return bins;
    static constexpr float kLo[5] = {0.0f, 0.1f, 0.15f, 0.25f, 0.3f};
    static constexpr float kHi[5] = {0.1f, 0.15f, 0.2f, 0.3f, 0.4f};
    double sum = 0.0;
    float best = distances.front();
    std::array<size_t, 5> counts{};
    for (float d : distances) {
        sum += d;
        best = std::min(best, d);
        for (int b = 0; b < 5; ++b) {
            if (d >= kLo[b] && d < kHi[b]) {
                ++counts[b];
                break;
            }
        }
    }
    for (int b = 0; b < 5; ++b) bins.fraction[b] = float(counts[b]) / float(distances.size());
    bins.average = float(sum / double(distances.size()));
    bins.best = best;
    return bins;
}

Delta0Calibration calibrate_delta0(const ModelCheckpoint& source,
                                   const std::vector<const ModelCheckpoint*>& innocent,
                                   const std::vector<const ModelCheckpoint*>& infringing,
                                   const KeySampleSet& keys, const AttributionConfig& cfg) {
    if (innocent.empty() || infringing.empty()) {
        throw std::invalid_argument("calibration needs at least one model on each side");
    }
    std::vector<Tensor> src_imgs = source_key_images(source, keys, cfg.samples_per_prompt);

    Delta0Calibration cal;
    for (const ModelCheckpoint* m : innocent) {
        InstanceReport rep = instance_conf_impl(source, *m, keys, cfg, &src_imgs);
        cal.innocent_distances.insert(cal.innocent_distances.end(), rep.distances.begin(),
                                      rep.distances.end());
    }
    for (const ModelCheckpoint* m : infringing) {
        InstanceReport rep = instance_conf_impl(source, *m, keys, cfg, &src_imgs);
        cal.infringing_distances.insert(cal.infringing_distances.end(),
                                        rep.distances.begin(), rep.distances.end());
    }
    cal.innocent_bins = bin_distances(cal.innocent_distances);
    cal.infringing_bins = bin_distances(cal.infringing_distances);

    std::vector<float> inn_sorted = cal.innocent_distances;
    std::vector<float> inf_sorted = cal.infringing_distances;
    std::sort(inn_sorted.begin(), inn_sorted.end());
    std::sort(inf_sorted.begin(), inf_sorted.end());
    const float inn_p10 = percentile_sorted(inn_sorted, 10.0);
    const float inf_p90 = percentile_sorted(inf_sorted, 90.0);

    if (inf_p90 < inn_p10) {
        cal.separable = true;
        cal.delta0 = std::clamp(0.5f * (inf_p90 + inn_p10), inf_p90, inn_p10);
        return cal;
    }

    // Overlapping populations: sweep every distinct pooled distance as a
    // threshold for "infringing iff d < threshold" and keep the best F1
    // (ties resolved toward the smallest threshold).
    cal.separable = false;
    cal.warning =
        "distance populations overlap (infringing p90 " + std::to_string(inf_p90) +
        " >= innocent p10 " + std::to_string(inn_p10) + "); using the best-F1 threshold";
    std::vector<float> pooled = inn_sorted;
    pooled.insert(pooled.end(), inf_sorted.begin(), inf_sorted.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
    // Candidate thresholds sit strictly above each distinct value (and above
    // none), so every achievable confusion table is visited.
    std::vector<float> candidates{pooled.front() * 0.5f};
    for (size_t i = 0; i + 1 < pooled.size(); ++i) {
        candidates.push_back(0.5f * (pooled[i] + pooled[i + 1]));
    }
    candidates.push_back(pooled.back() + 0.05f);
    float best_f1 = -1.0f, best_thr = cfg.delta0;
    for (float thr : candidates) {
        size_t tp = 0, fp = 0;
        for (float d : inf_sorted) {
            if (d < thr) ++tp;
        }
        for (float d : inn_sorted) {
            if (d < thr) ++fp;
        }
        const size_t fn = inf_sorted.size() - tp;
        const double denom = double(2 * tp + fp + fn);
        const float f1 = denom > 0.0 ? float(2.0 * double(tp) / denom) : 0.0f;
        if (f1 > best_f1) {
            best_f1 = f1;
            best_thr = thr;
        }
    }
    cal.delta0 = best_thr;
    return cal;
}

std::string histogram_table(const Delta0Calibration& cal) {
    char line[256];
    std::string out =
        "population    0-0.1  0.1-0.15  0.15-0.2  0.25-0.3   0.3-0.4       avg      best\n";
    const DistanceBins* rows[2] = {&cal.innocent_bins, &cal.infringing_bins};
    const char* names[2] = {"innocent", "infringing"};
    for (int r = 0; r < 2; ++r) {
        std::snprintf(line, sizeof line,
                      "%-10s  %7.3f  %8.3f  %8.3f  %8.3f  %8.3f  %8.4f  %8.4f\n", names[r],
                      double(rows[r]->fraction[0]), double(rows[r]->fraction[1]),
                      double(rows[r]->fraction[2]), double(rows[r]->fraction[3]),
                      double(rows[r]->fraction[4]), double(rows[r]->average),
                      double(rows[r]->best));
        out += line;
    }
    return out;
}

ShadowEnsemble build_shadow_ensemble(const ModelCheckpoint& source,
                                     const std::vector<LabeledPair>& source_data,
                                     const ModelCheckpoint& base, const WorldConfig& world,
                                     size_t n, size_t s, const TrainConfig& finetune_cfg,
                                     uint64_t seed) {
    if (n < 1 || s < 1) throw std::invalid_argument("need n >= 1 and s >= 1");
    if (source_data.size() < n) {
        throw std::invalid_argument("source training set has " +
                                    std::to_string(source_data.size()) +
                                    " pairs, cannot draw " + std::to_string(n) +
                                    " per shadow");
    }

    ShadowEnsemble ens;
    ens.seed = seed;

    // Innocent reference: a functionally similar model with no tie to the
    // source's generations, fine-tuned on fresh public renders.
    {
        std::vector<LabeledPair> ref_data = build_dataset(
            world, n, Partition::Public, derive_seed(seed, "innocent-ref-data"));
        ens.innocent_reference =
            finetune(base, ref_data, finetune_cfg, derive_seed(seed, "innocent-ref"));
    }

    // Query both image sources once per training prompt (shared seeds).
    const size_t total = source_data.size();
    std::vector<Tensor> img_src, img_in;
    img_src.reserve(total);
    img_in.reserve(total);
    for (const LabeledPair& pair : source_data) {
        const uint64_t ns = prompt_noise_seed(pair.prompt);
        img_src.push_back(generate(source, pair.prompt, ns));
        img_in.push_back(generate(ens.innocent_reference, pair.prompt, ns));
    }

    auto make_shadow = [&](bool infringing, size_t i) {
        const char* pick_stage = infringing ? "shadow-infringing" : "shadow-innocent";
        const char* train_stage =
            infringing ? "shadow-infringing-train" : "shadow-innocent-train";
        Rng rng(derive_seed(seed, pick_stage, i));
        // mixed count k in [1, n]: k = ceil(r*n) for r ~ U(0,1], so the
        // recorded fraction k/n is exact
        const double r = 1.0 - rng.next_double();
        const size_t k = std::min<size_t>(n, size_t(std::ceil(r * double(n))));
        std::vector<size_t> picks = draw_without_replacement(total, n, rng.next_u64());
        std::vector<LabeledPair> data;
        data.reserve(n);
        for (size_t j = 0; j < n; ++j) {
            const LabeledPair& src_pair = source_data[picks[j]];
            if (j < k) {
                data.push_back({src_pair.prompt,
                                infringing ? img_src[picks[j]] : img_in[picks[j]],
                                infringing ? Origin::SourceGenerated
                                           : Origin::OtherGenerated});
            } else {
                data.push_back({src_pair.prompt, src_pair.image, Origin::Real});
            }
        }
        ShadowModel shadow;
        shadow.infringing = infringing;
        shadow.rho = infringing ? float(double(k) / double(n)) : 0.0f;
        shadow.seed = derive_seed(seed, train_stage, i);
        shadow.ckpt = finetune(base, data, finetune_cfg, shadow.seed);
        shadow.ckpt.provenance.rho = shadow.rho;
        return shadow;
    };

    ens.innocent.reserve(s);
    ens.infringing.reserve(s);
    for (size_t i = 0; i < s; ++i) ens.innocent.push_back(make_shadow(false, i));
    for (size_t i = 0; i < s; ++i) ens.infringing.push_back(make_shadow(true, i));
    return ens;
}

Tensor discriminator_features(const PerceptualEmbedder& embedder, const Tensor& image) {
    const size_t side = embedder.image_side();
    if (image.numel() != side * side) {
        throw std::invalid_argument("image has " + std::to_string(image.numel()) +
                                    " pixels, embedder expects " +
                                    std::to_string(side * side));
    }
    if (side % 4 != 0) {
        throw std::invalid_argument("image side must be divisible by 4 for pooled features");
    }
    Tensor f({kDiscriminatorFeatures});
    Tensor emb = embedder.embed(image);
    for (size_t i = 0; i < kEmbedDim; ++i) f.at(i) = emb.at(i);
    const size_t block = side / 4;
    const float inv = 1.0f / float(block * block);
    for (size_t by = 0; by < 4; ++by) {
        for (size_t bx = 0; bx < 4; ++bx) {
            float acc = 0.0f;
            for (size_t y = by * block; y < (by + 1) * block; ++y) {
                for (size_t x = bx * block; x < (bx + 1) * block; ++x) {
                    acc += image.at(y * side + x);
                }
            }
            f.at(kEmbedDim + by * 4 + bx) = acc * inv;
        }
    }
    return f;
}

float discriminator_score(const Discriminator& d, const Tensor& features) {
    if (features.numel() != d.w.numel()) {
        throw std::invalid_argument("feature size " + std::to_string(features.numel()) +
                                    " does not match discriminator (" +
                                    std::to_string(d.w.numel()) + ")");
    }
    double z = double(d.b);
    for (size_t i = 0; i < features.numel(); ++i) {
        z += double(d.w.at(i)) * double(features.at(i));
    }
    return sigmoid(z);
}

Discriminator fit_logistic(const std::vector<Tensor>& features,
                           const std::vector<int>& labels, uint32_t iterations, float lr) {
    if (features.empty() || features.size() != labels.size()) {
        throw std::invalid_argument("features and labels must be nonempty and aligned");
    }
    const size_t F = features.front().numel();
    for (const Tensor& f : features) {
        if (f.numel() != F) throw std::invalid_argument("ragged feature rows");
    }
    const size_t n = features.size();
    Discriminator d;
    d.w = Tensor({F});
    d.b = 0.0f;
    std::vector<double> w(F, 0.0), gw(F);
    double b = 0.0;
    for (uint32_t it = 0; it < iterations; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (size_t r = 0; r < n; ++r) {
            double z = b;
            for (size_t i = 0; i < F; ++i) z += w[i] * double(features[r].at(i));
            const double g = 1.0 / (1.0 + std::exp(-z)) - double(labels[r]);
            for (size_t i = 0; i < F; ++i) gw[i] += g * double(features[r].at(i));
            gb += g;
        }
        const double scale = double(lr) / double(n);
        for (size_t i = 0; i < F; ++i) w[i] -= scale * gw[i];
        b -= scale * gb;
    }
    for (size_t i = 0; i < F; ++i) d.w.at(i) = float(w[i]);
    d.b = float(b);
    return d;
}

std::pair<Discriminator, DiscriminatorSplit> train_discriminator(
    const ShadowEnsemble& ensemble, const KeySampleSet& keys, float split, uint64_t seed) {
    if (keys.samples.empty()) throw std::invalid_argument("empty key set");
    if (!(split > 0.0f && split < 1.0f)) {
        throw std::invalid_argument("split must lie in (0,1), got " + std::to_string(split));
    }
    const size_t s_inn = ensemble.innocent.size();
    const size_t s_inf = ensemble.infringing.size();
    if (s_inn < 2 || s_inf < 2) {
        throw std::invalid_argument(
            "need at least two shadows per class so both split sides see both classes");
    }

    // Canonical order: innocent shadows first, then infringing.
    std::vector<const ShadowModel*> shadows;
    shadows.reserve(s_inn + s_inf);
    for (const ShadowModel& m : ensemble.innocent) shadows.push_back(&m);
    for (const ShadowModel& m : ensemble.infringing) shadows.push_back(&m);

    // Split per class so neither side is single-class.
    DiscriminatorSplit out_split;
    auto split_class = [&](size_t offset, size_t count, uint64_t cls) {
        size_t train_count = size_t(std::floor(double(split) * double(count)));
        train_count = std::clamp<size_t>(train_count, 1, count - 1);
        std::vector<size_t> order =
            draw_without_replacement(count, count, derive_seed(seed, "disc-split", cls));
        for (size_t i = 0; i < count; ++i) {
            (i < train_count ? out_split.train_shadows : out_split.test_shadows)
                .push_back(offset + order[i]);
        }
    };
    split_class(0, s_inn, 0);
    split_class(s_inn, s_inf, 1);
    std::sort(out_split.train_shadows.begin(), out_split.train_shadows.end());
    std::sort(out_split.test_shadows.begin(), out_split.test_shadows.end());

    const PerceptualEmbedder embedder(
        ensemble.innocent.front().ckpt.world.image_side);
    auto featurize = [&](const ShadowModel& m) {
        std::vector<Tensor> rows;
        rows.reserve(keys.samples.size());
        for (const KeySample& k : keys.samples) {
            Tensor img = generate(m.ckpt, k.prompt, prompt_noise_seed(k.prompt));
            rows.push_back(discriminator_features(embedder, img));
        }
        return rows;
    };

    std::vector<Tensor> train_feats;
    std::vector<int> train_labels;
    for (size_t idx : out_split.train_shadows) {
        for (Tensor& f : featurize(*shadows[idx])) {
            train_feats.push_back(std::move(f));
            train_labels.push_back(shadows[idx]->infringing ? 1 : 0);
        }
    }

    Discriminator d = fit_logistic(train_feats, train_labels, 2000, 0.5f);
    d.keys_digest = keyset_digest(keys);
    d.seed = seed;

    size_t correct = 0, total = 0;
    for (size_t idx : out_split.test_shadows) {
        for (const Tensor& f : featurize(*shadows[idx])) {
            const bool pred = discriminator_score(d, f) > 0.5f;
            correct += (pred == shadows[idx]->infringing) ? 1 : 0;
            ++total;
        }
    }
    out_split.test_accuracy = total > 0 ? float(correct) / float(total) : 0.0f;
    return {std::move(d), std::move(out_split)};
}

StatisticalReport statistical_verdict(const Discriminator& d,
                                      const ModelCheckpoint& suspect,
                                      const KeySampleSet& keys) {
    if (keys.samples.empty()) throw std::invalid_argument("empty key set");
    const Digest kd = keyset_digest(keys);
    if (d.keys_digest != kd) {
        throw std::invalid_argument(
            "discriminator was trained against a different key set");
    }
    StatisticalReport rep;
    rep.keys_digest = kd;
    rep.suspect_digest = checkpoint_digest(suspect);
    const PerceptualEmbedder embedder(suspect.world.image_side);
    double acc = 0.0;
    for (const KeySample& k : keys.samples) {
        Tensor img = generate(suspect, k.prompt, prompt_noise_seed(k.prompt));
        const float score = discriminator_score(d, discriminator_features(embedder, img));
        rep.image_scores.push_back(score);
        acc += double(score);
    }
    rep.model_score = float(acc / double(rep.image_scores.size()));
    rep.res = rep.model_score > 0.5f ? 1 : 0;
    return rep;
}

Digest keyset_digest(const KeySampleSet& keys) {
    Sha256 h;
    h.update("PLABKEYS");
    const uint8_t strat = uint8_t(keys.strategy);
    h.update(&strat, 1);
    append_u64(h, keys.selection_seed);
    h.update(keys.source_digest.bytes.data(), keys.source_digest.bytes.size());
    h.update(keys.dataset_digest.bytes.data(), keys.dataset_digest.bytes.size());
    append_u64(h, keys.samples.size());
    for (const KeySample& k : keys.samples) {
        for (uint8_t tok : k.prompt.tokens) h.update(&tok, 1);
        append_f32(h, k.score);
        const uint8_t ks = uint8_t(k.strategy);
        h.update(&ks, 1);
        append_u64(h, k.reference.numel());
        for (size_t i = 0; i < k.reference.numel(); ++i) append_f32(h, k.reference.at(i));
    }
    return h.finish();
}

}  // namespace provlab
