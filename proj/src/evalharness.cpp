#include "provlab/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"

namespace provlab {
namespace {

// Runs `total` independent jobs on up to `jobs` worker threads. Each job
// writes only to its own output slot, so results are identical for any
// worker count. The first exception thrown by a job is rethrown here.
template <typename Fn>
void run_jobs(size_t total, size_t jobs, Fn&& fn) {
    if (total == 0) return;
    const size_t workers = std::min(std::max<size_t>(jobs, 1), total);
    if (workers == 1) {
        for (size_t i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void require_both_classes(const ScoredPopulation& pop, const char* op) {
    size_t pos = 0;
    for (const ScoredModel& m : pop) pos += m.infringing ? 1 : 0;
    if (pop.empty() || pos == 0 || pos == pop.size()) {
        throw std::invalid_argument(std::string(op) +
                                    " needs at least one model of each class");
    }
}

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

float accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.empty() || predicted.size() != truth.size()) {
        throw std::invalid_argument("accuracy needs equal-length nonempty label lists");
    }
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        hits += predicted[i] == truth[i] ? 1 : 0;
    }
    return float(hits) / float(predicted.size());
}

float auc(const ScoredPopulation& pop) {
    require_both_classes(pop, "auc");
    // Midrank formulation: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg),
    // where R_pos is the sum of the infringing models' ranks and tied scores
    // share their average rank. Equivalent to the all-pairs count with ties
    // worth one half.
    std::vector<size_t> order(pop.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pop[a].score < pop[b].score; });
    double rank_sum_pos = 0.0;
    size_t n_pos = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && pop[order[j]].score == pop[order[i]].score) ++j;
        const double mid_rank = 0.5 * double(i + 1 + j);  // average of ranks i+1..j
        for (size_t k = i; k < j; ++k) {
            if (pop[order[k]].infringing) {
                rank_sum_pos += mid_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const size_t n_neg = pop.size() - n_pos;
    const double pairs = double(n_pos) * double(n_neg);
    return float((rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1)) / pairs);
}

float tpr_at_fpr(const ScoredPopulation& pop, float fpr_cap) {
    require_both_classes(pop, "tpr_at_fpr");
    if (!(fpr_cap >= 0.0f && fpr_cap <= 1.0f)) {
        throw std::invalid_argument("fpr cap must lie in [0,1]");
    }
    // Sweep thresholds "predict infringing iff score >= thr" downward through
    // the distinct scores; every achievable (FPR, TPR) operating point occurs
    // at one of them (the empty prediction point is TPR=0, FPR=0 <= cap).
    std::vector<size_t> order(pop.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return pop[a].score > pop[b].score; });
    size_t n_pos = 0;
    for (const ScoredModel& m : pop) n_pos += m.infringing ? 1 : 0;
    const size_t n_neg = pop.size() - n_pos;
    double best = 0.0;
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && pop[order[j]].score == pop[order[i]].score) ++j;
        for (size_t k = i; k < j; ++k) {
            if (pop[order[k]].infringing) ++tp; else ++fp;
        }
        const double fpr = double(fp) / double(n_neg);
        if (fpr <= double(fpr_cap)) best = std::max(best, double(tp) / double(n_pos));
        i = j;
    }
    return float(best);
}

void ExperimentPlan::validate() const {
    if (rho_values.empty()) throw std::invalid_argument("plan needs at least one rho value");
    for (float r : rho_values) {
        if (!(r >= 0.0f && r <= 1.0f)) throw std::invalid_argument("rho must lie in [0,1]");
    }
    if (repetitions < 1) throw std::invalid_argument("plan needs at least one repetition");
    if (suspect_pairs < 1) throw std::invalid_argument("suspects need at least one pair");
    attribution.validate();
}

RhoSweepResult run_rho_sweep(const ModelCheckpoint& source,
                             const std::vector<LabeledPair>& source_data,
                             const ModelCheckpoint& base, const WorldConfig& world,
                             const std::vector<KeySampleSet>& key_sets,
                             const ExperimentPlan& plan, size_t jobs) {
    plan.validate();
    if (key_sets.empty()) throw std::invalid_argument("sweep needs at least one key set");

    const size_t columns = plan.rho_values.size();
    const size_t reps = plan.repetitions;
    const size_t n = plan.suspect_pairs;

    // One suspect per (column, repetition), shared by every key set. Each job
    // derives its seeds from its own grid position, never from execution
    // order, so the sweep is reproducible for any worker count.
    std::vector<ModelCheckpoint> suspects(columns * reps);
    run_jobs(columns * reps, jobs, [&](size_t idx) {
        const size_t ci = idx / reps;
        const auto generated =
            size_t(std::llround(double(plan.rho_values[ci]) * double(n)));
        SuspectSpec spec;
        spec.generated_count = std::min(generated, n);
        spec.own_count = n - spec.generated_count;
        spec.data_seed = derive_seed(plan.seed, "sweep-data", idx);
        const ModelCheckpoint* src = spec.generated_count > 0 ? &source : nullptr;
        suspects[idx] = build_suspect(base, spec, src, source_data, world, plan.finetune,
                                      derive_seed(plan.seed, "sweep-train", idx));
    });

    RhoSweepResult result;
    result.suspect_digests.reserve(columns * reps);
    for (const ModelCheckpoint& s : suspects) {
        result.suspect_digests.push_back(checkpoint_digest(s));
    }

    result.cells.reserve(key_sets.size() * columns);
    for (const KeySampleSet& keys : key_sets) {
        for (size_t ci = 0; ci < columns; ++ci) {
            RhoCell cell;
            cell.strategy = keys.strategy;
            cell.reports.reserve(reps);
            double sum = 0.0;
            for (size_t rj = 0; rj < reps; ++rj) {
                const ModelCheckpoint& sus = suspects[ci * reps + rj];
                cell.reports.push_back(instance_conf(source, sus, keys, plan.attribution));
                sum += cell.reports.back().conf;
            }
            cell.rho = suspects[ci * reps].provenance.rho;
            cell.mean_conf = float(sum / double(reps));
            double var = 0.0;
            for (const InstanceReport& r : cell.reports) {
                const double d = double(r.conf) - double(cell.mean_conf);
                var += d * d;
            }
            cell.std_conf = float(std::sqrt(var / double(reps)));
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

NSweepResult run_n_sweep(const ModelCheckpoint& source,
                         const std::vector<const ModelCheckpoint*>& suspects,
                         const KeySampleSet& keys, const std::vector<size_t>& n_values,
                         const AttributionConfig& cfg) {
    if (suspects.empty()) throw std::invalid_argument("n sweep needs at least one suspect");
    for (const ModelCheckpoint* s : suspects) {
        if (s == nullptr) throw std::invalid_argument("null suspect");
    }
    if (n_values.empty()) throw std::invalid_argument("n sweep needs at least one size");
    for (size_t n : n_values) {
        if (n < 1 || n > keys.samples.size()) {
            throw std::invalid_argument("prefix size must lie in [1, key count]");
        }
    }

    NSweepResult result;
    result.reports.reserve(suspects.size());
    for (const ModelCheckpoint* s : suspects) {
        result.reports.push_back(instance_conf(source, *s, keys, cfg));
    }
    result.rows.reserve(n_values.size());
    for (size_t n : n_values) {
        double sum = 0.0;
        for (const InstanceReport& rep : result.reports) {
            const std::vector<float> prefix(rep.distances.begin(),
                                            rep.distances.begin() + std::ptrdiff_t(n));
            sum += conf_from_distances(prefix, cfg.delta0);
        }
        result.rows.push_back({n, float(sum / double(result.reports.size()))});
    }
    return result;
}

StatisticalEval run_statistical_eval(const ModelCheckpoint& source,
                                     const std::vector<LabeledPair>& source_data,
                                     const ModelCheckpoint& base, const WorldConfig& world,
                                     size_t n, size_t s, size_t eval_per_class,
                                     const KeySampleSet& keys,
                                     const TrainConfig& finetune_cfg, uint64_t seed,
                                     size_t jobs) {
    if (eval_per_class < 1) {
        throw std::invalid_argument("evaluation needs at least one model per class");
    }

    ShadowEnsemble ensemble = build_shadow_ensemble(source, source_data, base, world, n, s,
                                                    finetune_cfg, derive_seed(seed, "ensemble"));
    auto [disc, split] = train_discriminator(ensemble, keys, 0.5f, derive_seed(seed, "disc"));

    StatisticalEval eval;
    eval.shadow_test_accuracy = split.test_accuracy;
    eval.shadow_digests.reserve(2 * s + 1);
    for (const ShadowModel& m : ensemble.innocent) {
        eval.shadow_digests.push_back(checkpoint_digest(m.ckpt));
    }
    for (const ShadowModel& m : ensemble.infringing) {
        eval.shadow_digests.push_back(checkpoint_digest(m.ckpt));
    }
    eval.shadow_digests.push_back(checkpoint_digest(ensemble.innocent_reference));

    // Held-out population: innocent models fine-tuned on fresh renders only,
    // infringing ones on mixtures whose generated share is drawn afresh from
    // (0,1]. Their seeds live in a different namespace than the ensemble's,
    // and digest disjointness is asserted below.
    const size_t total = 2 * eval_per_class;
    std::vector<ModelCheckpoint> models(total);
    run_jobs(total, jobs, [&](size_t idx) {
        const bool infringing = idx >= eval_per_class;
        const size_t i = infringing ? idx - eval_per_class : idx;
        SuspectSpec spec;
        if (infringing) {
            Rng rho_rng(derive_seed(seed, "eval-rho", i));
            const double r = 1.0 - rho_rng.next_double();  // (0,1]
            spec.generated_count = std::min(n, size_t(std::ceil(r * double(n))));
            spec.own_count = n - spec.generated_count;
            spec.data_seed = derive_seed(seed, "eval-infringing-data", i);
            models[idx] = build_suspect(base, spec, &source, source_data, world, finetune_cfg,
                                        derive_seed(seed, "eval-infringing-train", i));
        } else {
            spec.own_count = n;
            spec.generated_count = 0;
            spec.data_seed = derive_seed(seed, "eval-innocent-data", i);
            models[idx] = build_suspect(base, spec, nullptr, source_data, world, finetune_cfg,
                                        derive_seed(seed, "eval-innocent-train", i));
        }
    });

    std::vector<int> predicted, truth;
    predicted.reserve(total);
    truth.reserve(total);
    eval.population.reserve(total);
    eval.reports.reserve(total);
    for (size_t idx = 0; idx < total; ++idx) {
        const bool infringing = idx >= eval_per_class;
        StatisticalReport rep = statistical_verdict(disc, models[idx], keys);
        for (const Digest& d : eval.shadow_digests) {
            if (d == rep.suspect_digest) {
                throw std::logic_error("evaluation model collides with a shadow");
            }
        }
        eval.population.push_back({rep.model_score, infringing, rep.suspect_digest});
        predicted.push_back(rep.res);
        truth.push_back(infringing ? 1 : 0);
        eval.reports.push_back(std::move(rep));
    }

    eval.acc = accuracy(predicted, truth);
    eval.auc_score = auc(eval.population);
    eval.tpr_at_10fpr = tpr_at_fpr(eval.population, 0.1f);
    eval.discriminator = std::move(disc);
    return eval;
}

std::string rho_sweep_csv(const RhoSweepResult& result) {
    std::string out = "strategy,rho,mean_conf,std_conf,repetitions\n";
    for (const RhoCell& cell : result.cells) {
        out += strategy_name(cell.strategy);
        out += ',';
        out += format_float(cell.rho);
        out += ',';
        out += format_float(cell.mean_conf);
        out += ',';
        out += format_float(cell.std_conf);
        out += ',';
        out += std::to_string(cell.reports.size());
        out += '\n';
    }
    return out;
}

std::string n_sweep_csv(const NSweepResult& result) {
    std::string out = "keys,mean_conf\n";
    for (const NSweepRow& row : result.rows) {
        out += std::to_string(row.n);
        out += ',';
        out += format_float(row.mean_conf);
        out += '\n';
    }
    return out;
}

std::string statistical_csv(const StatisticalEval& eval) {
    std::string out = "model,truth,score,predicted\n";
    for (size_t i = 0; i < eval.population.size(); ++i) {
        const ScoredModel& m = eval.population[i];
        out += m.digest.hex8();
        out += ',';
        out += m.infringing ? "infringing" : "innocent";
        out += ',';
        out += format_float(m.score);
        out += ',';
        out += eval.reports[i].res == 1 ? "infringing" : "innocent";
        out += '\n';
    }
    return out;
}

}  // namespace provlab
