// Population metrics (accuracy, pairwise ranking quality, capped
// true-positive rate), the mixture-fraction sweep, the key-count sweep, and
// the end-to-end statistical evaluation.
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "provlab/evalharness.hpp"
#include "provlab/keyselect.hpp"
#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"

using namespace provlab;

namespace {

// Small trained models shared by the sweep tests. Generation quality is
// irrelevant here; the sweeps are checked structurally and by recount.
struct Fixture {
    WorldConfig world;
    std::vector<LabeledPair> source_ds;
    ModelCheckpoint source;
    ModelCheckpoint base;
    ModelCheckpoint untrained;
    TrainConfig tune;

    Fixture() {
        world = WorldConfig::standard(42);
        world.image_side = 8;
        source_ds = build_dataset(world, 10, Partition::All, 3);

        TrainConfig cfg;
        cfg.iterations = 700;
        cfg.batch_size = 8;
        cfg.lr = 2e-3f;
        cfg.t_count = 16;
        cfg.arch.hidden = 32;
        cfg.arch.d_e = 8;
        cfg.arch.d_t = 8;
        source = train(world, source_ds, cfg, 11);

        TrainConfig base_cfg = cfg;
        base_cfg.iterations = 250;
        base = train(world, build_dataset(world, 8, Partition::Public, 5), base_cfg, 21);

        untrained.net = DenoiserNet(base.net.config(), 77);
        untrained.schedule = source.schedule;
        untrained.world = world;

        tune = cfg;
        tune.iterations = 50;
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

// All-pairs definition of the ranking metric: every (infringing, innocent)
// pair contributes 1 if ranked correctly, 1/2 on a tie.
double auc_oracle(const ScoredPopulation& pop) {
    double sum = 0.0;
    size_t pairs = 0;
    for (const ScoredModel& p : pop) {
        if (!p.infringing) continue;
        for (const ScoredModel& q : pop) {
            if (q.infringing) continue;
            ++pairs;
            if (p.score > q.score) sum += 1.0;
            else if (p.score == q.score) sum += 0.5;
        }
    }
    return sum / double(pairs);
}

// Exhaustive sweep over every achievable operating point: predict infringing
// iff score >= thr, for thr at each distinct score and one above the maximum.
double tpr_oracle(const ScoredPopulation& pop, double cap) {
    std::vector<float> thresholds;
    for (const ScoredModel& m : pop) thresholds.push_back(m.score);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    size_t n_pos = 0;
    for (const ScoredModel& m : pop) n_pos += m.infringing ? 1 : 0;
    const size_t n_neg = pop.size() - n_pos;
    double best = 0.0;  // the empty prediction set: TPR 0 at FPR 0
    for (float thr : thresholds) {
        size_t tp = 0, fp = 0;
        for (const ScoredModel& m : pop) {
            if (m.score >= thr) {
                if (m.infringing) ++tp;
                else ++fp;
            }
        }
        if (double(fp) / double(n_neg) <= cap) {
            best = std::max(best, double(tp) / double(n_pos));
        }
    }
    return best;
}

// Random population on a coarse score grid so ties are frequent; both
// classes always present.
ScoredPopulation random_population(Rng& rng, size_t n) {
    ScoredPopulation pop(n);
    for (size_t i = 0; i < n; ++i) {
        pop[i].score = float(rng.next_below(17)) / 16.0f;
        pop[i].infringing = rng.next_below(2) == 1;
        pop[i].digest.bytes[0] = uint8_t(i);
    }
    pop[0].infringing = false;
    pop[n - 1].infringing = true;
    return pop;
}

}  // namespace

TEST_CASE("accuracy counts matching labels") {
    CHECK(accuracy({1, 0, 1, 1}, {1, 1, 1, 0}) == doctest::Approx(0.5f));
    CHECK(accuracy({0, 0}, {0, 0}) == 1.0f);
    CHECK(accuracy({1}, {0}) == 0.0f);
    CHECK_THROWS_AS(accuracy({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(accuracy({1, 0}, {1}), std::invalid_argument);
}

TEST_CASE("ranking quality matches the all-pairs oracle on tied populations") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 2 + size_t(rng.next_below(24));
        ScoredPopulation pop = random_population(rng, n);
        // The midrank formulation and the pair loop compute the same exact
        // numerator (sums of halves), so the floats must match bit-for-bit.
        CHECK(auc(pop) == float(auc_oracle(pop)));
    }
}

TEST_CASE("ranking quality known values") {
    ScoredPopulation sep = {{0.9f, true, {}}, {0.8f, true, {}}, {0.2f, false, {}}};
    CHECK(auc(sep) == 1.0f);
    ScoredPopulation inv = {{0.1f, true, {}}, {0.8f, false, {}}};
    CHECK(auc(inv) == 0.0f);
    ScoredPopulation tied = {{0.5f, true, {}}, {0.5f, false, {}}, {0.5f, true, {}}};
    CHECK(auc(tied) == 0.5f);
    ScoredPopulation one_class = {{0.5f, true, {}}, {0.6f, true, {}}};
    CHECK_THROWS_AS(auc(one_class), std::invalid_argument);
    CHECK_THROWS_AS(auc({}), std::invalid_argument);
}

TEST_CASE("capped true-positive rate matches the exhaustive threshold oracle") {
    Rng rng(777);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 2 + size_t(rng.next_below(24));
        ScoredPopulation pop = random_population(rng, n);
        for (float cap : {0.0f, 0.1f, 0.25f, 0.5f, 1.0f}) {
            CHECK(tpr_at_fpr(pop, cap) == float(tpr_oracle(pop, double(cap))));
        }
    }
}

TEST_CASE("capped true-positive rate known values") {
    ScoredPopulation sep = {{0.9f, true, {}}, {0.8f, true, {}}, {0.2f, false, {}}};
    CHECK(tpr_at_fpr(sep, 0.0f) == 1.0f);  // threshold above 0.2 catches both
    CHECK(tpr_at_fpr(sep, 1.0f) == 1.0f);
    ScoredPopulation inv = {{0.1f, true, {}}, {0.8f, false, {}}};
    CHECK(tpr_at_fpr(inv, 0.0f) == 0.0f);
    CHECK(tpr_at_fpr(inv, 1.0f) == 1.0f);  // the catch-all threshold
    CHECK_THROWS_AS(tpr_at_fpr(inv, -0.1f), std::invalid_argument);
    CHECK_THROWS_AS(tpr_at_fpr(inv, 1.5f), std::invalid_argument);
    ScoredPopulation one_class = {{0.5f, false, {}}};
    CHECK_THROWS_AS(tpr_at_fpr(one_class, 0.5f), std::invalid_argument);
}

TEST_CASE("rank metrics are invariant under strictly monotone score maps") {
    Rng rng(31337);
    auto affine = [](float x) { return 3.5f * x - 1.25f; };
    auto cube = [](float x) { return x * x * x; };
    auto expm = [](float x) { return std::exp(x); };
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 3 + size_t(rng.next_below(20));
        ScoredPopulation pop = random_population(rng, n);
        const float base_auc = auc(pop);
        const float base_tpr01 = tpr_at_fpr(pop, 0.1f);
        const float base_tpr05 = tpr_at_fpr(pop, 0.5f);
        for (int map = 0; map < 3; ++map) {
            ScoredPopulation mapped = pop;
            for (ScoredModel& m : mapped) {
                m.score = map == 0 ? affine(m.score) : map == 1 ? cube(m.score)
                                                                : expm(m.score);
            }
            CHECK(auc(mapped) == base_auc);
            CHECK(tpr_at_fpr(mapped, 0.1f) == base_tpr01);
            CHECK(tpr_at_fpr(mapped, 0.5f) == base_tpr05);
        }
    }
}

TEST_CASE("experiment plan validation") {
    ExperimentPlan plan;
    CHECK_NOTHROW(plan.validate());
    ExperimentPlan bad = plan;
    bad.rho_values = {0.5f, 1.2f};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = plan;
    bad.rho_values.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = plan;
    bad.repetitions = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = plan;
    bad.suspect_pairs = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = plan;
    bad.attribution.delta0 = 0.0f;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("mixture sweep: structure, realized fractions, and aggregate recount") {
    const Fixture& f = fixture();
    ExperimentPlan plan;
    plan.rho_values = {0.0f, 0.5f, 1.0f};
    plan.repetitions = 2;
    plan.suspect_pairs = 6;
    plan.finetune = f.tune;
    plan.attribution.key_count = 4;
    plan.seed = 91;

    std::vector<KeySampleSet> key_sets = {detect_key_samples(f.source, f.source_ds, 4),
                                          random_key_samples(f.source_ds, 4, 99)};
    RhoSweepResult res = run_rho_sweep(f.source, f.source_ds, f.base, f.world, key_sets,
                                       plan, 1);

    REQUIRE(res.cells.size() == 6);  // strategy-major, rho-minor
    REQUIRE(res.suspect_digests.size() == 6);
    std::set<std::string> digests;
    for (const Digest& d : res.suspect_digests) digests.insert(d.hex());
    CHECK(digests.size() == 6);

    for (size_t i = 0; i < res.cells.size(); ++i) {
        const RhoCell& cell = res.cells[i];
        CHECK(cell.strategy == (i < 3 ? KeyStrategy::Detect : KeyStrategy::Random));
        CHECK(cell.rho == plan.rho_values[i % 3]);  // 6-pair grid realizes these exactly
        REQUIRE(cell.reports.size() == 2);

        double sum = 0.0;
        for (const InstanceReport& r : cell.reports) {
            sum += r.conf;
            CHECK(r.delta0 == plan.attribution.delta0);
            CHECK(r.delta == plan.attribution.delta);
            CHECK(r.strategy == cell.strategy);
            REQUIRE(r.distances.size() == 4);
        }
        const float mean = float(sum / 2.0);
        CHECK(cell.mean_conf == mean);
        double var = 0.0;
        for (const InstanceReport& r : cell.reports) {
            var += (double(r.conf) - double(mean)) * (double(r.conf) - double(mean));
        }
        CHECK(cell.std_conf == doctest::Approx(std::sqrt(var / 2.0)).epsilon(1e-6));
    }

    // The same suspect column feeds every strategy: reports in cells (0,3),
    // (1,4), (2,5) target identical suspect digests.
    for (size_t col = 0; col < 3; ++col) {
        for (size_t rep = 0; rep < 2; ++rep) {
            CHECK(res.cells[col].reports[rep].suspect_digest ==
                  res.cells[col + 3].reports[rep].suspect_digest);
            CHECK(res.cells[col].reports[rep].suspect_digest ==
                  res.suspect_digests[col * 2 + rep]);
        }
    }

    SUBCASE("deterministic and worker-count independent") {
        RhoSweepResult again = run_rho_sweep(f.source, f.source_ds, f.base, f.world,
                                             key_sets, plan, 3);
        REQUIRE(again.cells.size() == res.cells.size());
        for (size_t i = 0; i < res.cells.size(); ++i) {
            CHECK(again.cells[i].mean_conf == res.cells[i].mean_conf);
            CHECK(again.cells[i].std_conf == res.cells[i].std_conf);
            for (size_t rj = 0; rj < 2; ++rj) {
                CHECK(again.cells[i].reports[rj].distances ==
                      res.cells[i].reports[rj].distances);
            }
        }
        for (size_t i = 0; i < res.suspect_digests.size(); ++i) {
            CHECK(again.suspect_digests[i] == res.suspect_digests[i]);
        }
    }

    SUBCASE("rejects an empty key-set list") {
        CHECK_THROWS_AS(
            run_rho_sweep(f.source, f.source_ds, f.base, f.world, {}, plan, 1),
            std::invalid_argument);
    }
}

TEST_CASE("key-count sweep rows recount from persisted distances") {
    const Fixture& f = fixture();
    KeySampleSet keys = random_key_samples(f.source_ds, 4, 17);
    AttributionConfig cfg;
    cfg.key_count = 4;

    std::vector<const ModelCheckpoint*> suspects = {&f.source, &f.untrained};
    NSweepResult res = run_n_sweep(f.source, suspects, keys, {1, 2, 4}, cfg);

    REQUIRE(res.reports.size() == 2);
    REQUIRE(res.rows.size() == 3);
    CHECK(res.reports[0].conf == 1.0f);  // the source against itself

    for (size_t ri = 0; ri < res.rows.size(); ++ri) {
        const size_t n = res.rows[ri].n;
        double sum = 0.0;
        for (const InstanceReport& rep : res.reports) {
            REQUIRE(rep.distances.size() == 4);
            std::vector<float> prefix(rep.distances.begin(),
                                      rep.distances.begin() + std::ptrdiff_t(n));
            sum += conf_from_distances(prefix, cfg.delta0);
        }
        CHECK(res.rows[ri].mean_conf == float(sum / 2.0));
    }

    // The full-length row reproduces the mean of the full-set confidences.
    CHECK(res.rows[2].mean_conf ==
          float((double(res.reports[0].conf) + double(res.reports[1].conf)) / 2.0));

    CHECK_THROWS_AS(run_n_sweep(f.source, suspects, keys, {0}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_n_sweep(f.source, suspects, keys, {5}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_n_sweep(f.source, suspects, keys, {}, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_n_sweep(f.source, {}, keys, {1}, cfg), std::invalid_argument);
    std::vector<const ModelCheckpoint*> with_null = {&f.source, nullptr};
    CHECK_THROWS_AS(run_n_sweep(f.source, with_null, keys, {1}, cfg),
                    std::invalid_argument);
}

TEST_CASE("statistical evaluation: structure, disjointness, and metric recount") {
    const Fixture& f = fixture();
    KeySampleSet keys = random_key_samples(f.source_ds, 4, 23);
    StatisticalEval eval = run_statistical_eval(f.source, f.source_ds, f.base, f.world,
                                                /*n=*/6, /*s=*/2, /*eval_per_class=*/2,
                                                keys, f.tune, 5, 1);

    REQUIRE(eval.population.size() == 4);
    REQUIRE(eval.reports.size() == 4);
    REQUIRE(eval.shadow_digests.size() == 5);  // 2 per class + innocent reference
    CHECK_FALSE(eval.population[0].infringing);
    CHECK_FALSE(eval.population[1].infringing);
    CHECK(eval.population[2].infringing);
    CHECK(eval.population[3].infringing);

    std::set<std::string> all;
    for (const Digest& d : eval.shadow_digests) all.insert(d.hex());
    for (const ScoredModel& m : eval.population) all.insert(m.digest.hex());
    CHECK(all.size() == 9);  // evaluation suspects never reuse ensemble models

    std::vector<int> predicted, truth;
    for (size_t i = 0; i < 4; ++i) {
        predicted.push_back(eval.reports[i].res);
        truth.push_back(i >= 2 ? 1 : 0);
        CHECK(eval.population[i].score == eval.reports[i].model_score);
        CHECK(eval.population[i].digest == eval.reports[i].suspect_digest);
        CHECK(eval.reports[i].keys_digest == keyset_digest(keys));
    }
    CHECK(eval.acc == accuracy(predicted, truth));
    CHECK(eval.auc_score == auc(eval.population));
    CHECK(eval.tpr_at_10fpr == tpr_at_fpr(eval.population, 0.1f));
    CHECK(eval.shadow_test_accuracy >= 0.0f);
    CHECK(eval.shadow_test_accuracy <= 1.0f);
    // the fitted scorer rides along for artifact persistence
    CHECK(eval.discriminator.keys_digest == keyset_digest(keys));
    CHECK(eval.discriminator.w.numel() == kDiscriminatorFeatures);

    SUBCASE("deterministic and worker-count independent") {
        StatisticalEval again = run_statistical_eval(f.source, f.source_ds, f.base,
                                                     f.world, 6, 2, 2, keys, f.tune, 5, 3);
        REQUIRE(again.population.size() == 4);
        for (size_t i = 0; i < 4; ++i) {
            CHECK(again.population[i].score == eval.population[i].score);
            CHECK(again.population[i].digest == eval.population[i].digest);
        }
        CHECK(again.acc == eval.acc);
        CHECK(again.auc_score == eval.auc_score);
        CHECK(again.tpr_at_10fpr == eval.tpr_at_10fpr);
    }

    SUBCASE("rejects an empty evaluation population") {
        CHECK_THROWS_AS(run_statistical_eval(f.source, f.source_ds, f.base, f.world, 6, 2,
                                             0, keys, f.tune, 5, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("csv renderings") {
    RhoSweepResult sweep;
    RhoCell cell;
    cell.rho = 0.5f;
    cell.strategy = KeyStrategy::Random;
    cell.mean_conf = 0.25f;
    cell.std_conf = 0.125f;
    cell.reports.resize(2);
    sweep.cells.push_back(cell);
    CHECK(rho_sweep_csv(sweep) ==
          "strategy,rho,mean_conf,std_conf,repetitions\nrandom,0.5,0.25,0.125,2\n");

    NSweepResult nres;
    nres.rows = {{5, 0.75f}, {10, 1.0f}};
    CHECK(n_sweep_csv(nres) == "keys,mean_conf\n5,0.75\n10,1\n");

    StatisticalEval eval;
    ScoredModel m;
    m.score = 0.875f;
    m.infringing = true;
    eval.population.push_back(m);
    StatisticalReport rep;
    rep.res = 1;
    eval.reports.push_back(rep);
    CHECK(statistical_csv(eval) ==
          "model,truth,score,predicted\n00000000,infringing,0.875,infringing\n");
}
