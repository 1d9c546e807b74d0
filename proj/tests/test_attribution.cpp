// Instance-level confidence, threshold calibration, suspect construction,
// and the shadow-population discriminator.
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "provlab/attribution.hpp"
#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"
#include "provlab/simembed.hpp"

using namespace provlab;

namespace {

// One trained source, one independently trained base, and one untrained
// model, shared by the tests in this file. The source needs enough training
// that its generations are distinguishable from an untrained net's; nothing
// here depends on generation quality beyond that.
struct Fixture {
    WorldConfig world;
    std::vector<LabeledPair> source_ds;
    ModelCheckpoint source;
    ModelCheckpoint base;
    ModelCheckpoint untrained;
    TrainConfig tune;  // small fine-tuning recipe for suspects/shadows

    Fixture() {
        world = WorldConfig::standard(42);
        world.image_side = 8;
        source_ds = build_dataset(world, 12, Partition::All, 3);

        TrainConfig cfg;
        cfg.iterations = 2500;
        cfg.batch_size = 8;
        cfg.lr = 2e-3f;
        cfg.t_count = 64;
        cfg.arch.hidden = 48;
        cfg.arch.d_e = 8;
        cfg.arch.d_t = 8;
        source = train(world, source_ds, cfg, 11);

        TrainConfig base_cfg = cfg;
        base_cfg.iterations = 600;
        base = train(world, build_dataset(world, 10, Partition::Public, 5), base_cfg, 21);

        untrained.net = DenoiserNet(base.net.config(), 77);
        untrained.schedule = source.schedule;
        untrained.world = world;

        tune = cfg;
        tune.iterations = 60;
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

float sigmoid_ref(double z) { return float(1.0 / (1.0 + std::exp(-z))); }

// Brute-force F1 of the rule "infringing iff distance < thr".
float f1_at(const std::vector<float>& innocent, const std::vector<float>& infringing,
            float thr) {
    size_t tp = 0, fp = 0;
    for (float d : infringing)
        if (d < thr) ++tp;
    for (float d : innocent)
        if (d < thr) ++fp;
    size_t fn = infringing.size() - tp;
    double denom = double(2 * tp + fp + fn);
    return denom > 0 ? float(2.0 * double(tp) / denom) : 0.0f;
}

}  // namespace

TEST_CASE("suspect_rho is the generated fraction") {
    CHECK(suspect_rho({.own_count = 10, .generated_count = 0}) == 0.0f);
    CHECK(suspect_rho({.own_count = 0, .generated_count = 10}) == 1.0f);
    CHECK(suspect_rho({.own_count = 5, .generated_count = 15}) == 0.75f);
    CHECK(suspect_rho({.own_count = 3, .generated_count = 1}) == 0.25f);
    CHECK_THROWS_AS(suspect_rho({.own_count = 0, .generated_count = 0}),
                    std::invalid_argument);
}

TEST_CASE("build_suspect_dataset mixes tagged source generations with own renders") {
    const Fixture& f = fixture();
    SuspectSpec spec{.own_count = 4, .generated_count = 6, .data_seed = 99};
    std::vector<LabeledPair> mixed =
        build_suspect_dataset(spec, &f.source, f.source_ds, f.world);
    REQUIRE(mixed.size() == 10);

    // Generated pairs lead, carry the tag, and reproduce the source's output
    // for the shared per-prompt seed bit for bit.
    std::set<size_t> source_prompts;
    for (const LabeledPair& p : f.source_ds) source_prompts.insert(p.prompt.index());
    std::set<size_t> picked;
    for (size_t i = 0; i < 6; ++i) {
        CHECK(mixed[i].origin == Origin::SourceGenerated);
        CHECK(source_prompts.count(mixed[i].prompt.index()) == 1);
        picked.insert(mixed[i].prompt.index());
        Tensor expect =
            generate(f.source, mixed[i].prompt, prompt_noise_seed(mixed[i].prompt));
        CHECK(mixed[i].image.vec() == expect.vec());
    }
    CHECK(picked.size() == 6);  // distinct prompts, drawn without replacement
    for (size_t i = 6; i < 10; ++i) CHECK(mixed[i].origin == Origin::Real);

    // Deterministic in the seed; a different seed picks a different mixture.
    std::vector<LabeledPair> again =
        build_suspect_dataset(spec, &f.source, f.source_ds, f.world);
    CHECK(dataset_digest(mixed) == dataset_digest(again));
    SuspectSpec other = spec;
    other.data_seed = 100;
    CHECK(dataset_digest(build_suspect_dataset(other, &f.source, f.source_ds, f.world)) !=
          dataset_digest(mixed));
}

TEST_CASE("build_suspect_dataset rejects impossible mixtures") {
    const Fixture& f = fixture();
    CHECK_THROWS_AS(build_suspect_dataset({.own_count = 0, .generated_count = 0},
                                          &f.source, f.source_ds, f.world),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_suspect_dataset({.own_count = 1, .generated_count = 1}, nullptr,
                                          f.source_ds, f.world),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_suspect_dataset({.own_count = 0, .generated_count = 13},
                                          &f.source, f.source_ds, f.world),
                    std::invalid_argument);
    // All-own mixtures never touch the source.
    std::vector<LabeledPair> own_only = build_suspect_dataset(
        {.own_count = 3, .generated_count = 0}, nullptr, {}, f.world);
    CHECK(own_only.size() == 3);
    for (const LabeledPair& p : own_only) CHECK(p.origin == Origin::Real);
}

TEST_CASE("build_suspect records the mixture and its parent in provenance") {
    const Fixture& f = fixture();
    SuspectSpec spec{.own_count = 2, .generated_count = 3, .data_seed = 7};
    ModelCheckpoint sus =
        build_suspect(f.base, spec, &f.source, f.source_ds, f.world, f.tune, 1234);
    CHECK(sus.provenance.rho == 0.6f);
    CHECK(sus.provenance.parent == checkpoint_digest(f.base));
    CHECK(sus.provenance.train_seed == 1234);
    std::vector<LabeledPair> mixture =
        build_suspect_dataset(spec, &f.source, f.source_ds, f.world);
    CHECK(sus.provenance.dataset_digest == dataset_digest(mixture));
}

TEST_CASE("conf_from_distances counts strictly-below distances") {
    CHECK(conf_from_distances({0.1f, 0.2f, 0.3f}, 0.15f) == 1.0f / 3.0f);
    CHECK(conf_from_distances({0.15f}, 0.15f) == 0.0f);  // boundary is not below
    CHECK(conf_from_distances({0.0f, 0.0f}, 0.15f) == 1.0f);
    CHECK_THROWS_AS(conf_from_distances({}, 0.15f), std::invalid_argument);

    // Monotone in the threshold: raising delta0 can only admit more keys.
    Rng rng(4242);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<float> d(1 + rng.next_below(40));
        for (float& v : d) v = rng.next_float();
        float lo = rng.next_float(), hi = rng.next_float();
        if (lo > hi) std::swap(lo, hi);
        CHECK(conf_from_distances(d, lo) <= conf_from_distances(d, hi));
    }
}

TEST_CASE("instance_verdict uses a strict threshold") {
    CHECK(instance_verdict(0.51f, 0.5f));
    CHECK_FALSE(instance_verdict(0.5f, 0.5f));  // equality is not infringement
    CHECK_FALSE(instance_verdict(0.0f, 0.5f));
    CHECK(instance_verdict(1.0f, 0.5f));
    CHECK_THROWS_AS(instance_verdict(1.5f, 0.5f), std::invalid_argument);
    CHECK_THROWS_AS(instance_verdict(-0.1f, 0.5f), std::invalid_argument);
}

TEST_CASE("bin_distances places values in the report's fixed bins") {
    // One value per bin boundary, plus the 0.2-0.25 hole and the tail.
    std::vector<float> d{0.05f, 0.1f, 0.15f, 0.22f, 0.25f, 0.3f, 0.4f, 0.9f};
    DistanceBins bins = bin_distances(d);
    CHECK(bins.count == 8);
    CHECK(bins.fraction[0] == 0.125f);  // 0.05
    CHECK(bins.fraction[1] == 0.125f);  // 0.1
    CHECK(bins.fraction[2] == 0.125f);  // 0.15
    CHECK(bins.fraction[3] == 0.125f);  // 0.25
    CHECK(bins.fraction[4] == 0.125f);  // 0.3
    CHECK(bins.best == 0.05f);
    double mean = 0.0;
    for (float v : d) mean += v;
    mean /= 8.0;
    CHECK(bins.average == doctest::Approx(mean));
    CHECK(bin_distances({}).count == 0);
}

TEST_CASE("self-attribution is exact: every distance zero, conf one") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 6);
    AttributionConfig cfg;
    InstanceReport rep = instance_conf(f.source, f.source, keys, cfg);
    REQUIRE(rep.distances.size() == 6);
    for (float d : rep.distances) CHECK(d == 0.0f);
    CHECK(rep.conf == 1.0f);
    CHECK(rep.verdict);
    CHECK(rep.source_digest == checkpoint_digest(f.source));
    CHECK(rep.suspect_digest == rep.source_digest);
    CHECK(rep.keys_digest == keyset_digest(keys));
    CHECK(rep.strategy == KeyStrategy::Detect);
}

TEST_CASE("an untrained model earns no confidence") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 6);
    AttributionConfig cfg;
    InstanceReport rep = instance_conf(f.source, f.untrained, keys, cfg);
    CHECK(rep.conf <= 0.1f);
    CHECK_FALSE(rep.verdict);
    for (float d : rep.distances) CHECK(d > 0.0f);
}

TEST_CASE("instance_conf recount oracle, including multi-sample averaging") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 4);
    AttributionConfig cfg;
    cfg.samples_per_prompt = 2;
    InstanceReport rep = instance_conf(f.source, f.base, keys, cfg);
    REQUIRE(rep.distances.size() == 4);
    for (size_t k = 0; k < 4; ++k) {
        const Prompt& p = keys.samples[k].prompt;
        double acc = 0.0;
        for (size_t j = 0; j < 2; ++j) {
            uint64_t seed = prompt_noise_seed(p) + j;
            acc += recon_distance(generate(f.source, p, seed), generate(f.base, p, seed));
        }
        CHECK(rep.distances[k] == float(acc / 2.0));
    }
    CHECK(rep.conf == conf_from_distances(rep.distances, cfg.delta0));
    CHECK(rep.verdict == (rep.conf > cfg.delta));
}

TEST_CASE("instance_conf enforces the key/source pairing") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 3);
    AttributionConfig cfg;
    CHECK_THROWS_AS(instance_conf(f.base, f.untrained, keys, cfg), std::invalid_argument);

    // The source-agnostic baseline set (zero digest) pairs with any source.
    KeySampleSet random_keys = random_key_samples(f.source_ds, 3, 5);
    REQUIRE(random_keys.source_digest.is_zero());
    InstanceReport rep = instance_conf(f.base, f.base, random_keys, cfg);
    CHECK(rep.conf == 1.0f);

    KeySampleSet empty;
    CHECK_THROWS_AS(instance_conf(f.source, f.base, empty, cfg), std::invalid_argument);
}

TEST_CASE("calibrate_delta0 splits cleanly separated populations") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 6);
    AttributionConfig cfg;
    Delta0Calibration cal =
        calibrate_delta0(f.source, {&f.untrained}, {&f.source}, keys, cfg);
    REQUIRE(cal.separable);
    CHECK(cal.warning.empty());
    REQUIRE(cal.innocent_distances.size() == 6);
    REQUIRE(cal.infringing_distances.size() == 6);
    for (float d : cal.infringing_distances) CHECK(d == 0.0f);
    float inn_min = *std::min_element(cal.innocent_distances.begin(),
                                      cal.innocent_distances.end());
    CHECK(inn_min > 0.0f);
    CHECK(cal.delta0 > 0.0f);
    CHECK(cal.delta0 <= inn_min);
    CHECK(cal.infringing_bins.best == 0.0f);
    CHECK(cal.innocent_bins.count == 6);

    std::string table = histogram_table(cal);
    CHECK(table.find("innocent") != std::string::npos);
    CHECK(table.find("infringing") != std::string::npos);

    // With the calibrated threshold, the verdicts reproduce the labels.
    AttributionConfig tuned = cfg;
    tuned.delta0 = cal.delta0;
    CHECK(instance_conf(f.source, f.source, keys, tuned).verdict);
    CHECK_FALSE(instance_conf(f.source, f.untrained, keys, tuned).verdict);
}

TEST_CASE("calibrate_delta0 falls back to the best-F1 threshold on overlap") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 6);
    AttributionConfig cfg;

    // Identical populations (both the source itself): maximal overlap.
    Delta0Calibration cal = calibrate_delta0(f.source, {&f.source}, {&f.source}, keys, cfg);
    REQUIRE_FALSE(cal.separable);
    CHECK_FALSE(cal.warning.empty());
    // All distances are zero; the only thresholds worth considering are at
    // zero (rejects everything, F1 0) and above (accepts everything, F1 2/3).
    CHECK(cal.delta0 > 0.0f);
    CHECK(f1_at(cal.innocent_distances, cal.infringing_distances, cal.delta0) ==
          doctest::Approx(2.0 / 3.0));

    // Inverted populations: the innocent side sits at zero distance, the
    // infringing side far away. No threshold separates them the right way
    // around; the chosen threshold must still maximize F1.
    Delta0Calibration inv =
        calibrate_delta0(f.source, {&f.source}, {&f.untrained}, keys, cfg);
    REQUIRE_FALSE(inv.separable);
    float best = 0.0f;
    std::vector<float> pool = inv.innocent_distances;
    pool.insert(pool.end(), inv.infringing_distances.begin(),
                inv.infringing_distances.end());
    pool.push_back(1.0f);
    for (float d : pool) {
        best = std::max(best, f1_at(inv.innocent_distances, inv.infringing_distances,
                                    d + 1e-4f));
        best = std::max(best, f1_at(inv.innocent_distances, inv.infringing_distances,
                                    d - 1e-4f));
    }
    CHECK(f1_at(inv.innocent_distances, inv.infringing_distances, inv.delta0) ==
          doctest::Approx(best));

    CHECK_THROWS_AS(calibrate_delta0(f.source, {}, {&f.source}, keys, cfg),
                    std::invalid_argument);
}

TEST_CASE("discriminator features are the embedding plus pooled pixel blocks") {
    const Fixture& f = fixture();
    PerceptualEmbedder emb(f.world.image_side);
    Tensor img = f.source_ds.front().image;
    Tensor feat = discriminator_features(emb, img);
    REQUIRE(feat.numel() == kDiscriminatorFeatures);

    Tensor e = emb.embed(img);
    for (size_t i = 0; i < kEmbedDim; ++i) CHECK(feat.at(i) == e.at(i));

    const size_t side = f.world.image_side;
    const size_t block = side / 4;
    for (size_t by = 0; by < 4; ++by) {
        for (size_t bx = 0; bx < 4; ++bx) {
            float acc = 0.0f;
            for (size_t y = by * block; y < (by + 1) * block; ++y)
                for (size_t x = bx * block; x < (bx + 1) * block; ++x)
                    acc += img.at(y * side + x);
            CHECK(feat.at(kEmbedDim + by * 4 + bx) ==
                  doctest::Approx(acc / float(block * block)));
        }
    }

    Tensor wrong({4});
    CHECK_THROWS_AS(discriminator_features(emb, wrong), std::invalid_argument);
}

TEST_CASE("discriminator_score is the logistic of the linear form") {
    Discriminator d;
    d.w = Tensor({kDiscriminatorFeatures});
    d.b = 0.0f;
    Tensor feat({kDiscriminatorFeatures});
    CHECK(discriminator_score(d, feat) == 0.5f);  // all-zero form

    d.b = std::log(9.0f);
    CHECK(discriminator_score(d, feat) == doctest::Approx(0.9f));
    d.b = -std::log(9.0f);
    CHECK(discriminator_score(d, feat) == doctest::Approx(0.1f));

    Rng rng(31);
    for (size_t i = 0; i < kDiscriminatorFeatures; ++i) {
        d.w.at(i) = rng.next_gaussian();
        feat.at(i) = rng.next_gaussian();
    }
    d.b = 0.25f;
    double z = 0.25;
    for (size_t i = 0; i < kDiscriminatorFeatures; ++i)
        z += double(d.w.at(i)) * double(feat.at(i));
    CHECK(discriminator_score(d, feat) == doctest::Approx(sigmoid_ref(z)));

    Tensor bad({3});
    CHECK_THROWS_AS(discriminator_score(d, bad), std::invalid_argument);
}

TEST_CASE("fit_logistic separates a linearly separable cloud") {
    Rng rng(8);
    std::vector<Tensor> feats;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        Tensor f({2});
        int y = i % 2;
        f.at(0) = (y ? 1.5f : -1.5f) + 0.3f * rng.next_gaussian();
        f.at(1) = rng.next_gaussian();
        feats.push_back(std::move(f));
        labels.push_back(y);
    }
    Discriminator d = fit_logistic(feats, labels, 2000, 0.5f);
    size_t correct = 0;
    for (size_t i = 0; i < feats.size(); ++i) {
        bool pred = discriminator_score(d, feats[i]) > 0.5f;
        correct += (pred == (labels[i] == 1)) ? 1 : 0;
    }
    CHECK(correct == feats.size());
    CHECK(d.w.at(0) > 0.0f);  // the separating direction
    CHECK_THROWS_AS(fit_logistic({}, {}, 10, 0.1f), std::invalid_argument);
}

TEST_CASE("shadow ensemble structure: classes, mixture fractions, provenance") {
    const Fixture& f = fixture();
    ShadowEnsemble ens =
        build_shadow_ensemble(f.source, f.source_ds, f.base, f.world, 4, 2, f.tune, 501);
    REQUIRE(ens.innocent.size() == 2);
    REQUIRE(ens.infringing.size() == 2);
    for (const ShadowModel& m : ens.innocent) {
        CHECK_FALSE(m.infringing);
        CHECK(m.rho == 0.0f);
        CHECK(m.ckpt.provenance.rho == 0.0f);
        CHECK(m.ckpt.provenance.parent == checkpoint_digest(f.base));
    }
    for (const ShadowModel& m : ens.infringing) {
        CHECK(m.infringing);
        CHECK(m.rho > 0.0f);
        CHECK(m.rho <= 1.0f);
        // rho is an exact multiple of 1/n.
        float k = m.rho * 4.0f;
        CHECK(std::round(k) == doctest::Approx(k));
        CHECK(k >= 1.0f);
        CHECK(m.ckpt.provenance.rho == m.rho);
    }
    // Distinct shadows train on distinct mixtures.
    CHECK(checkpoint_digest(ens.innocent[0].ckpt) != checkpoint_digest(ens.innocent[1].ckpt));
    CHECK(checkpoint_digest(ens.infringing[0].ckpt) !=
          checkpoint_digest(ens.infringing[1].ckpt));

    // Fully deterministic rebuild.
    ShadowEnsemble again =
        build_shadow_ensemble(f.source, f.source_ds, f.base, f.world, 4, 2, f.tune, 501);
    CHECK(checkpoint_digest(again.innocent_reference) ==
          checkpoint_digest(ens.innocent_reference));
    for (size_t i = 0; i < 2; ++i) {
        CHECK(checkpoint_digest(again.innocent[i].ckpt) ==
              checkpoint_digest(ens.innocent[i].ckpt));
        CHECK(checkpoint_digest(again.infringing[i].ckpt) ==
              checkpoint_digest(ens.infringing[i].ckpt));
    }

    CHECK_THROWS_AS(build_shadow_ensemble(f.source, f.source_ds, f.base, f.world, 13, 2,
                                          f.tune, 501),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        build_shadow_ensemble(f.source, f.source_ds, f.base, f.world, 0, 2, f.tune, 501),
        std::invalid_argument);
}

TEST_CASE("the discriminator separates a cleanly split shadow population") {
    const Fixture& f = fixture();
    KeySampleSet keys = detect_key_samples(f.source, f.source_ds, 5);

    // Handcrafted ensemble with an unmistakable gap: infringing shadows
    // behave exactly like the source, innocent ones are untrained.
    ShadowEnsemble ens;
    ens.innocent.push_back({f.untrained, 0.0f, false, 1});
    ModelCheckpoint untrained2;
    untrained2.net = DenoiserNet(f.base.net.config(), 78);
    untrained2.schedule = f.source.schedule;
    untrained2.world = f.world;
    ens.innocent.push_back({untrained2, 0.0f, false, 2});
    ens.infringing.push_back({f.source, 1.0f, true, 3});
    ens.infringing.push_back({f.source, 1.0f, true, 4});

    auto [disc, split] = train_discriminator(ens, keys, 0.5f, 909);
    CHECK(disc.keys_digest == keyset_digest(keys));
    REQUIRE(split.train_shadows.size() == 2);  // one per class
    REQUIRE(split.test_shadows.size() == 2);
    CHECK(split.test_accuracy == 1.0f);

    // Verdicts follow the population labels.
    StatisticalReport pos = statistical_verdict(disc, f.source, keys);
    CHECK(pos.res == 1);
    CHECK(pos.model_score > 0.5f);
    REQUIRE(pos.image_scores.size() == 5);
    StatisticalReport neg = statistical_verdict(disc, f.untrained, keys);
    CHECK(neg.res == 0);

    // Recount: the model score is the mean of the image scores.
    double mean = 0.0;
    for (float s : pos.image_scores) mean += double(s);
    CHECK(pos.model_score == doctest::Approx(mean / 5.0));
    CHECK(pos.suspect_digest == checkpoint_digest(f.source));
    CHECK(pos.keys_digest == keyset_digest(keys));

    // Determinism of the whole fit.
    auto [disc2, split2] = train_discriminator(ens, keys, 0.5f, 909);
    CHECK(disc2.w.vec() == disc.w.vec());
    CHECK(disc2.b == disc.b);
    CHECK(split2.train_shadows == split.train_shadows);

    // A single shadow per class cannot be split into train and test halves.
    ShadowEnsemble thin;
    thin.innocent.push_back({f.untrained, 0.0f, false, 1});
    thin.infringing.push_back({f.source, 1.0f, true, 2});
    CHECK_THROWS_AS(train_discriminator(thin, keys, 0.5f, 909), std::invalid_argument);
}

TEST_CASE("statistical_verdict stubs: constant scores via the bias") {
    const Fixture& f = fixture();
    KeySampleSet keys = random_key_samples(f.source_ds, 4, 17);
    Discriminator d;
    d.w = Tensor({kDiscriminatorFeatures});
    d.b = std::log(9.0f);  // every image scores 0.9
    d.keys_digest = keyset_digest(keys);
    StatisticalReport rep = statistical_verdict(d, f.base, keys);
    CHECK(rep.model_score == doctest::Approx(0.9f));
    CHECK(rep.res == 1);

    d.b = 0.0f;  // every image scores exactly 0.5: not strictly above
    StatisticalReport half = statistical_verdict(d, f.base, keys);
    CHECK(half.model_score == 0.5f);
    CHECK(half.res == 0);

    // Pairing check: a discriminator fit to different keys is rejected.
    KeySampleSet other = random_key_samples(f.source_ds, 4, 18);
    CHECK_THROWS_AS(statistical_verdict(d, f.base, other), std::invalid_argument);
}

TEST_CASE("keyset_digest is canonical and content-sensitive") {
    const Fixture& f = fixture();
    KeySampleSet a = random_key_samples(f.source_ds, 4, 17);
    KeySampleSet b = random_key_samples(f.source_ds, 4, 17);
    CHECK(keyset_digest(a) == keyset_digest(b));

    KeySampleSet c = a;
    c.samples[0].score += 1.0f;
    CHECK(keyset_digest(c) != keyset_digest(a));
    c = a;
    c.samples[1].prompt =
        Prompt::from_index(uint16_t((c.samples[1].prompt.index() + 1) % 1024));
    CHECK(keyset_digest(c) != keyset_digest(a));
    c = a;
    c.samples.pop_back();
    CHECK(keyset_digest(c) != keyset_digest(a));
    c = a;
    c.strategy = KeyStrategy::Generate;
    CHECK(keyset_digest(c) != keyset_digest(a));
    c = a;
    c.samples[2].reference.at(0) += 0.5f;
    CHECK(keyset_digest(c) != keyset_digest(a));
}
