#include "provlab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "provlab/attribution.hpp"
#include "provlab/evalharness.hpp"
#include "provlab/rng.hpp"
#include "provlab/serialize.hpp"
#include "provlab/store.hpp"
#include "provlab/textio.hpp"

namespace provlab {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Mean training loss over the trailing window — the number a run is judged by.
double tail_loss(const std::vector<float>& trace) {
    if (trace.empty()) return 0.0;
    const size_t window = std::min<size_t>(50, trace.size());
    double sum = 0.0;
    for (size_t i = trace.size() - window; i < trace.size(); ++i) sum += trace[i];
    return sum / double(window);
}

bool world_matches(const WorldConfig& a, const WorldConfig& b) {
    return a.image_side == b.image_side && a.style_amplitude == b.style_amplitude &&
           a.seed == b.seed && a.private_combos == b.private_combos;
}

ModelCheckpoint load_checkpoint(const ArtifactStore& store, const std::string& name,
                                const WorldConfig& world) {
    if (!store.has(name)) {
        throw std::runtime_error("missing artifact '" + name +
                                 "' in " + store.root() + " (build it first)");
    }
    ModelCheckpoint ckpt = parse_checkpoint(store.get(name));
    if (!world_matches(ckpt.world, world)) {
        throw std::runtime_error("artifact '" + name +
                                 "' was built for a different world; rerun with the "
                                 "original config or a fresh --out");
    }
    return ckpt;
}

KeySampleSet load_keys(const ArtifactStore& store, const std::string& name) {
    if (!store.has(name)) {
        throw std::runtime_error("missing key set '" + name + "' in " + store.root() +
                                 " (run select-keys first)");
    }
    return parse_keyset_text(store.get(name));
}

struct SourceBundle {
    ModelCheckpoint ckpt;
    std::vector<LabeledPair> data;
    Digest ckpt_digest{};
    Digest data_digest{};  // store digest of the dataset artifact
};

SourceBundle train_source_from_config(const RunConfig& cfg) {
    SourceBundle src;
    src.data = build_dataset(cfg.world, cfg.source_pairs, Partition::All,
                             derive_seed(cfg.seed, "cli-source-data"));
    src.ckpt = train(cfg.world, src.data, cfg.source_train,
                     derive_seed(cfg.seed, "cli-source-train"));
    return src;
}

SourceBundle put_source(ArtifactStore& store, const std::string& name, SourceBundle src,
                        const WorldConfig& world) {
    src.data_digest = store.put(name + "-data", serialize_dataset(src.data, world));
    src.ckpt_digest = store.put(name, serialize_checkpoint(src.ckpt));
    return src;
}

SourceBundle load_source(const ArtifactStore& store, const std::string& name,
                         const WorldConfig& world) {
    SourceBundle src;
    src.ckpt = load_checkpoint(store, name, world);
    const std::string data_name = name + "-data";
    if (!store.has(data_name)) {
        throw std::runtime_error("missing artifact '" + data_name + "' in " + store.root());
    }
    WorldConfig stored;
    src.data = parse_dataset(store.get(data_name), &stored);
    if (!world_matches(stored, world)) {
        throw std::runtime_error("artifact '" + data_name +
                                 "' was built for a different world");
    }
    src.ckpt_digest = store.digest_of(name);
    src.data_digest = store.digest_of(data_name);
    return src;
}

// Experiment prerequisites are built on demand and cached in the store; the
// bytes are identical whether they come from an earlier command or from here.
SourceBundle ensure_source(const RunConfig& cfg, ArtifactStore& store,
                           const std::string& name) {
    if (store.has(name) && store.has(name + "-data")) {
        return load_source(store, name, cfg.world);
    }
    return put_source(store, name, train_source_from_config(cfg), cfg.world);
}

ModelCheckpoint ensure_base(const RunConfig& cfg, ArtifactStore& store) {
    if (store.has("base")) return load_checkpoint(store, "base", cfg.world);
    std::vector<LabeledPair> data = build_dataset(cfg.world, cfg.base_pairs,
                                                  Partition::Public,
                                                  derive_seed(cfg.seed, "cli-base-data"));
    TrainConfig base_cfg = cfg.source_train;
    base_cfg.iterations = cfg.base_iterations;
    ModelCheckpoint base =
        train(cfg.world, data, base_cfg, derive_seed(cfg.seed, "cli-base-train"));
    store.put("base-data", serialize_dataset(data, cfg.world));
    store.put("base", serialize_checkpoint(base));
    return base;
}

KeySampleSet select_keys_from_config(const RunConfig& cfg, const SourceBundle& src,
                                     KeyStrategy strategy) {
    switch (strategy) {
        case KeyStrategy::Detect:
            return detect_key_samples(src.ckpt, src.data, cfg.attribution.key_count);
        case KeyStrategy::Generate:
            return generate_key_samples(src.ckpt, src.data, cfg.attribution.key_count,
                                        cfg.keygen, derive_seed(cfg.seed, "cli-keys"));
        case KeyStrategy::Random:
            return random_key_samples(src.data, cfg.attribution.key_count,
                                      derive_seed(cfg.seed, "cli-keys"));
    }
    throw std::invalid_argument("unknown key strategy");
}

std::string keys_artifact_name(KeyStrategy strategy) {
    return std::string("keys-") + strategy_name(strategy);
}

KeySampleSet ensure_detect_keys(const RunConfig& cfg, ArtifactStore& store,
                                const SourceBundle& src) {
    const std::string name = keys_artifact_name(KeyStrategy::Detect);
    if (store.has(name)) return load_keys(store, name);
    KeySampleSet keys = select_keys_from_config(cfg, src, KeyStrategy::Detect);
    store.put(name, serialize_keyset_text(keys));
    return keys;
}

// '#'-comment preamble recording the digest of every input artifact a table
// was computed from (the table body follows unchanged).
std::string table_provenance(const std::string& kind,
                             const std::vector<std::pair<std::string, Digest>>& inputs) {
    std::string out = "# provlab " + kind + " table\n";
    for (const auto& [label, digest] : inputs) {
        out += "# " + label + " " + digest.hex() + '\n';
    }
    return out;
}

std::string suspect_default_name(float rho) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "suspect-r%g", double(rho));
    return buf;
}

size_t generated_count_for(float rho, size_t pairs) {
    const auto generated = size_t(std::llround(double(rho) * double(pairs)));
    return std::min(generated, pairs);
}

}  // namespace

CliArgs parse_cli_args(int argc, const char* const* argv) {
    CliArgs args;
    args.source_name = "source";
    args.discriminator_name = "discriminator";
    std::vector<std::string> words;
    for (int i = 1; i < argc; ++i) words.emplace_back(argv[i]);
    size_t i = 0;
    auto value = [&](const std::string& flag) -> std::string {
        if (i + 1 >= words.size()) {
            throw std::invalid_argument(flag + " needs a value");
        }
        return words[++i];
    };
    for (; i < words.size(); ++i) {
        const std::string& w = words[i];
        if (w == "--help" || w == "-h") {
            args.help = true;
        } else if (w == "--config") {
            args.config_path = value(w);
        } else if (w == "--seed") {
            args.seed = parse_u64(value(w));
        } else if (w == "--out") {
            args.out_dir = value(w);
        } else if (w == "--jobs") {
            args.jobs = uint32_t(parse_u64(value(w)));
        } else if (w == "--exit-on-infringe") {
            args.exit_on_infringe = true;
        } else if (w == "--rho") {
            args.rho = parse_f32(value(w));
        } else if (w == "--strategy") {
            args.strategy = value(w);
        } else if (w == "--source") {
            args.source_name = value(w);
        } else if (w == "--suspect") {
            args.suspect_name = value(w);
        } else if (w == "--keys") {
            args.keys_name = value(w);
        } else if (w == "--discriminator") {
            args.discriminator_name = value(w);
        } else if (w == "--level") {
            args.level = value(w);
        } else if (w == "--suite") {
            args.suite = value(w);
        } else if (!w.empty() && w[0] == '-') {
            throw std::invalid_argument("unknown flag '" + w + "'");
        } else if (args.command.empty()) {
            args.command = w;
        } else {
            throw std::invalid_argument("unexpected argument '" + w + "'");
        }
    }
    if (!args.help) {
        static const char* kCommands[] = {"train-source", "build-suspect", "select-keys",
                                          "attribute", "experiment"};
        if (args.command.empty()) {
            throw std::invalid_argument("no command given (try --help)");
        }
        bool known = false;
        for (const char* c : kCommands) known = known || args.command == c;
        if (!known) {
            throw std::invalid_argument("unknown command '" + args.command +
                                        "' (try --help)");
        }
    }
    return args;
}

RunConfig resolve_config(const CliArgs& args, const char* env_out) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = parse_runconfig(read_file(args.config_path));
    if (args.seed) cfg.seed = *args.seed;
    if (args.jobs) cfg.jobs = *args.jobs;
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (cfg.out_dir.empty() && env_out != nullptr && *env_out != '\0') {
        cfg.out_dir = env_out;
    }
    if (cfg.out_dir.empty()) {
        throw std::invalid_argument(
            "no output directory: pass --out, set the config's out key, or set PROVLAB_OUT");
    }
    cfg.validate();
    return cfg;
}

CommandOutcome cmd_train_source(const RunConfig& cfg) {
    ArtifactStore store(cfg.out_dir);
    SourceBundle src = put_source(store, "source", train_source_from_config(cfg), cfg.world);

    CommandOutcome out;
    out.artifact = "source";
    out.digest = src.ckpt_digest;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "train-source source=%s data=%s pairs=%zu iterations=%u tail-loss=%.4f",
                  src.ckpt_digest.hex8().c_str(), src.data_digest.hex8().c_str(),
                  src.data.size(), cfg.source_train.iterations,
                  tail_loss(src.ckpt.loss_trace));
    out.summary = std::string(buf) + " path=" + store.object_path(src.ckpt_digest);
    return out;
}

CommandOutcome cmd_build_suspect(const RunConfig& cfg, float rho,
                                 const std::string& source_name,
                                 const std::string& suspect_name) {
    if (!(rho >= 0.0f && rho <= 1.0f)) {
        throw std::invalid_argument("rho must lie in [0,1], got " + format_f32(rho));
    }
    ArtifactStore store(cfg.out_dir);

    SuspectSpec spec;
    spec.generated_count = generated_count_for(rho, cfg.plan_suspect_pairs);
    spec.own_count = cfg.plan_suspect_pairs - spec.generated_count;
    spec.data_seed = derive_seed(cfg.seed, "cli-suspect-data");

    // An innocent suspect never touches the source; the mixed ones draw the
    // source's training prompts and images.
    SourceBundle src;
    const ModelCheckpoint* src_ptr = nullptr;
    if (spec.generated_count > 0) {
        src = load_source(store, source_name, cfg.world);
        src_ptr = &src.ckpt;
    }
    ModelCheckpoint base = ensure_base(cfg, store);

    std::vector<LabeledPair> mixed;
    ModelCheckpoint suspect =
        build_suspect(base, spec, src_ptr, src.data, cfg.world, cfg.finetune,
                      derive_seed(cfg.seed, "cli-suspect-train"), &mixed);

    const std::string name = suspect_name.empty() ? suspect_default_name(rho) : suspect_name;
    store.put(name + "-data", serialize_dataset(mixed, cfg.world, src.ckpt_digest));
    const Digest cd = store.put(name, serialize_checkpoint(suspect));

    CommandOutcome out;
    out.artifact = name;
    out.digest = cd;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "build-suspect suspect=%s digest=%s rho=%s generated=%zu own=%zu "
                  "iterations=%u",
                  name.c_str(), cd.hex8().c_str(), format_f32(suspect.provenance.rho).c_str(),
                  spec.generated_count, spec.own_count, cfg.finetune.iterations);
    out.summary = std::string(buf) + " path=" + store.object_path(cd);
    return out;
}

CommandOutcome cmd_select_keys(const RunConfig& cfg, KeyStrategy strategy,
                               const std::string& source_name) {
    ArtifactStore store(cfg.out_dir);
    SourceBundle src = load_source(store, source_name, cfg.world);
    KeySampleSet keys = select_keys_from_config(cfg, src, strategy);
    const std::string name = keys_artifact_name(strategy);
    const Digest kd = store.put(name, serialize_keyset_text(keys));

    CommandOutcome out;
    out.artifact = name;
    out.digest = kd;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "select-keys keys=%s digest=%s strategy=%s count=%zu",
                  name.c_str(), kd.hex8().c_str(), strategy_name(strategy),
                  keys.samples.size());
    out.summary = std::string(buf) + " path=" + store.object_path(kd);
    return out;
}

CommandOutcome cmd_attribute(const RunConfig& cfg, const std::string& source_name,
                             const std::string& suspect_name, const std::string& keys_name,
                             const std::string& level,
                             const std::string& discriminator_name) {
    if (level != "instance" && level != "statistical") {
        throw std::invalid_argument("level must be 'instance' or 'statistical', got '" +
                                    level + "'");
    }
    ArtifactStore store(cfg.out_dir);
    ModelCheckpoint suspect = load_checkpoint(store, suspect_name, cfg.world);
    KeySampleSet keys = load_keys(store, keys_name);
    ModelCheckpoint source = load_checkpoint(store, source_name, cfg.world);

    CommandOutcome out;
    char buf[256];
    if (level == "instance") {
        InstanceReport rep = instance_conf(source, suspect, keys, cfg.attribution);
        const std::string name = "report-instance-" + suspect_name + "-" + keys_name;
        const Digest rd = store.put(name, serialize_instance_report(rep));
        out.artifact = name;
        out.digest = rd;
        out.infringing = rep.verdict;
        std::snprintf(buf, sizeof(buf),
                      "attribute level=instance verdict=%s conf=%s delta0=%s keys=%s",
                      rep.verdict ? "infringing" : "clean", format_f32(rep.conf).c_str(),
                      format_f32(rep.delta0).c_str(), strategy_name(rep.strategy));
        out.summary = std::string(buf) + " report=" + name +
                      " path=" + store.object_path(rd);
        return out;
    }

    // Statistical level scores the suspect with a previously fitted
    // discriminator (see experiment --suite statistical-eval).
    if (!keys.source_digest.is_zero() && keys.source_digest != checkpoint_digest(source)) {
        throw std::invalid_argument(
            "key set was selected against a different source checkpoint");
    }
    if (!store.has(discriminator_name)) {
        throw std::runtime_error("missing discriminator '" + discriminator_name +
                                 "'; run experiment --suite statistical-eval first");
    }
    Discriminator disc = parse_discriminator_text(store.get(discriminator_name));
    StatisticalReport rep = statistical_verdict(disc, suspect, keys);
    const std::string name = "report-statistical-" + suspect_name + "-" + keys_name;
    const Digest rd = store.put(name, serialize_statistical_report(rep));
    out.artifact = name;
    out.digest = rd;
    out.infringing = rep.res == 1;
    std::snprintf(buf, sizeof(buf), "attribute level=statistical res=%d score=%s", rep.res,
                  format_f32(rep.model_score).c_str());
    out.summary = std::string(buf) + " report=" + name + " path=" + store.object_path(rd);
    return out;
}

CommandOutcome cmd_experiment(const RunConfig& cfg, const std::string& suite) {
    ArtifactStore store(cfg.out_dir);
    SourceBundle src = ensure_source(cfg, store, "source");
    ModelCheckpoint base = ensure_base(cfg, store);
    ExperimentPlan plan = cfg.plan();

    CommandOutcome out;
    char buf[256];
    if (suite == "rho-sweep") {
        // Judge under every key set already in the store; fall back to the
        // detection strategy when none has been selected yet.
        std::vector<KeySampleSet> key_sets;
        std::vector<std::pair<std::string, Digest>> inputs = {
            {"source", src.ckpt_digest}, {"base", store.digest_of("base")}};
        for (KeyStrategy s :
             {KeyStrategy::Detect, KeyStrategy::Generate, KeyStrategy::Random}) {
            const std::string name = keys_artifact_name(s);
            if (store.has(name)) {
                key_sets.push_back(load_keys(store, name));
                inputs.emplace_back(name, store.digest_of(name));
            }
        }
        if (key_sets.empty()) {
            key_sets.push_back(ensure_detect_keys(cfg, store, src));
            const std::string name = keys_artifact_name(KeyStrategy::Detect);
            inputs.emplace_back(name, store.digest_of(name));
        }
        RhoSweepResult res =
            run_rho_sweep(src.ckpt, src.data, base, cfg.world, key_sets, plan, cfg.jobs);
        const std::string table = table_provenance("rho-sweep", inputs) + rho_sweep_csv(res);
        const Digest td = store.put("rho-sweep.csv", table);
        out.artifact = "rho-sweep.csv";
        out.digest = td;
        std::snprintf(buf, sizeof(buf), "experiment suite=rho-sweep cells=%zu suspects=%zu",
                      res.cells.size(), res.suspect_digests.size());
        out.summary = std::string(buf) + " csv=rho-sweep.csv path=" + store.object_path(td);
        return out;
    }

    if (suite == "n-sweep") {
        KeySampleSet keys = ensure_detect_keys(cfg, store, src);
        std::vector<ModelCheckpoint> suspects(plan.repetitions);
        for (size_t i = 0; i < suspects.size(); ++i) {
            SuspectSpec spec;
            spec.generated_count = plan.suspect_pairs;
            spec.own_count = 0;
            spec.data_seed = derive_seed(plan.seed, "nsweep-data", i);
            suspects[i] = build_suspect(base, spec, &src.ckpt, src.data, cfg.world,
                                        plan.finetune, derive_seed(plan.seed, "nsweep-train", i));
        }
        std::vector<const ModelCheckpoint*> ptrs;
        for (const ModelCheckpoint& m : suspects) ptrs.push_back(&m);
        NSweepResult res =
            run_n_sweep(src.ckpt, ptrs, keys, cfg.nsweep_sizes, cfg.attribution);
        const std::string table =
            table_provenance(
                "n-sweep",
                {{"source", src.ckpt_digest},
                 {"base", store.digest_of("base")},
                 {"keys-detect", store.digest_of(keys_artifact_name(KeyStrategy::Detect))}}) +
            n_sweep_csv(res);
        const Digest td = store.put("n-sweep.csv", table);
        out.artifact = "n-sweep.csv";
        out.digest = td;
        std::snprintf(buf, sizeof(buf), "experiment suite=n-sweep rows=%zu suspects=%zu",
                      res.rows.size(), suspects.size());
        out.summary = std::string(buf) + " csv=n-sweep.csv path=" + store.object_path(td);
        return out;
    }

    if (suite == "delta0-table") {
        KeySampleSet keys = ensure_detect_keys(cfg, store, src);
        const uint64_t cal_seed = derive_seed(cfg.seed, "cli-delta0");
        const size_t n = cfg.plan_suspect_pairs;
        std::vector<ModelCheckpoint> innocent(cfg.plan_repetitions);
        std::vector<ModelCheckpoint> infringing(cfg.plan_repetitions);
        for (size_t i = 0; i < cfg.plan_repetitions; ++i) {
            SuspectSpec spec;
            spec.own_count = n;
            spec.generated_count = 0;
            spec.data_seed = derive_seed(cal_seed, "innocent-data", i);
            innocent[i] = build_suspect(base, spec, nullptr, src.data, cfg.world,
                                        cfg.finetune, derive_seed(cal_seed, "innocent-train", i));
        }
        for (size_t i = 0; i < cfg.plan_repetitions; ++i) {
            SuspectSpec spec;
            spec.own_count = 0;
            spec.generated_count = n;
            spec.data_seed = derive_seed(cal_seed, "infringing-data", i);
            infringing[i] =
                build_suspect(base, spec, &src.ckpt, src.data, cfg.world, cfg.finetune,
                              derive_seed(cal_seed, "infringing-train", i));
        }
        std::vector<const ModelCheckpoint*> inn_ptrs, inf_ptrs;
        for (const ModelCheckpoint& m : innocent) inn_ptrs.push_back(&m);
        for (const ModelCheckpoint& m : infringing) inf_ptrs.push_back(&m);
        Delta0Calibration cal =
            calibrate_delta0(src.ckpt, inn_ptrs, inf_ptrs, keys, cfg.attribution);

        std::string table = table_provenance(
            "delta0",
            {{"source", src.ckpt_digest},
             {"base", store.digest_of("base")},
             {"keys-detect", store.digest_of(keys_artifact_name(KeyStrategy::Detect))}});
        table += histogram_table(cal);
        table += "delta0 " + format_f32(cal.delta0) + '\n';
        table += std::string("separable ") + (cal.separable ? "1" : "0") + '\n';
        if (!cal.warning.empty()) table += "warning " + cal.warning + '\n';
        const Digest td = store.put("delta0-table.txt", table);
        out.artifact = "delta0-table.txt";
        out.digest = td;
        std::snprintf(buf, sizeof(buf), "experiment suite=delta0-table delta0=%s separable=%d",
                      format_f32(cal.delta0).c_str(), cal.separable ? 1 : 0);
        out.summary =
            std::string(buf) + " table=delta0-table.txt path=" + store.object_path(td);
        return out;
    }

    if (suite == "statistical-eval") {
        KeySampleSet keys = ensure_detect_keys(cfg, store, src);
        StatisticalEval eval = run_statistical_eval(
            src.ckpt, src.data, base, cfg.world, cfg.eval.pairs, cfg.eval.shadows,
            cfg.eval.per_class, keys, cfg.finetune, derive_seed(cfg.seed, "cli-eval"),
            cfg.jobs);
        const Digest dd =
            store.put("discriminator", serialize_discriminator_text(eval.discriminator));
        const std::string table =
            table_provenance(
                "statistical-eval",
                {{"source", src.ckpt_digest},
                 {"base", store.digest_of("base")},
                 {"keys-detect", store.digest_of(keys_artifact_name(KeyStrategy::Detect))},
                 {"discriminator", dd}}) +
            statistical_csv(eval);
        const Digest td = store.put("statistical-eval.csv", table);
        out.artifact = "statistical-eval.csv";
        out.digest = td;
        std::snprintf(buf, sizeof(buf),
                      "experiment suite=statistical-eval acc=%s auc=%s tpr10=%s shadow-acc=%s",
                      format_f32(eval.acc).c_str(), format_f32(eval.auc_score).c_str(),
                      format_f32(eval.tpr_at_10fpr).c_str(),
                      format_f32(eval.shadow_test_accuracy).c_str());
        out.summary =
            std::string(buf) + " csv=statistical-eval.csv path=" + store.object_path(td);
        return out;
    }

    throw std::invalid_argument(
        "unknown suite '" + suite +
        "' (expected rho-sweep, n-sweep, delta0-table, or statistical-eval)");
}

std::string cli_usage() {
    return
        "usage: provlab <command> [flags]\n"
        "\n"
        "commands:\n"
        "  train-source                 train the source model and store it with its dataset\n"
        "  build-suspect --rho R        fine-tune a suspect whose data is R source-generated\n"
        "                               [--source NAME] [--suspect NAME]\n"
        "  select-keys --strategy S     pick key samples (detect | generate | random)\n"
        "                               [--source NAME]\n"
        "  attribute --suspect NAME --keys NAME --level L\n"
        "                               L = instance | statistical; [--source NAME]\n"
        "                               [--discriminator NAME]\n"
        "  experiment --suite S         S = rho-sweep | n-sweep | delta0-table |\n"
        "                               statistical-eval\n"
        "\n"
        "flags:\n"
        "  --config PATH   run-configuration file (all keys default when omitted)\n"
        "  --seed INT      override the config's master seed\n"
        "  --out DIR       artifact store directory (fallback: config 'out' key,\n"
        "                  then the PROVLAB_OUT environment variable)\n"
        "  --jobs INT      worker threads for experiment suites\n"
        "  --exit-on-infringe   exit with code 2 when the verdict is infringing\n"
        "\n"
        "exit codes: 0 ok, 1 error, 2 infringing verdict (with --exit-on-infringe)\n";
}

int run_cli(int argc, const char* const* argv) {
    try {
        CliArgs args = parse_cli_args(argc, argv);
        if (args.help) {
            std::fputs(cli_usage().c_str(), stdout);
            return 0;
        }
        RunConfig cfg = resolve_config(args, std::getenv("PROVLAB_OUT"));
        CommandOutcome out;
        if (args.command == "train-source") {
            out = cmd_train_source(cfg);
        } else if (args.command == "build-suspect") {
            if (!args.rho) throw std::invalid_argument("build-suspect needs --rho");
            out = cmd_build_suspect(cfg, *args.rho, args.source_name, args.suspect_name);
        } else if (args.command == "select-keys") {
            if (args.strategy.empty()) {
                throw std::invalid_argument("select-keys needs --strategy");
            }
            out = cmd_select_keys(cfg, parse_strategy(args.strategy), args.source_name);
        } else if (args.command == "attribute") {
            if (args.suspect_name.empty() || args.keys_name.empty() || args.level.empty()) {
                throw std::invalid_argument("attribute needs --suspect, --keys, and --level");
            }
            out = cmd_attribute(cfg, args.source_name, args.suspect_name, args.keys_name,
                                args.level, args.discriminator_name);
        } else {
            if (args.suite.empty()) throw std::invalid_argument("experiment needs --suite");
            out = cmd_experiment(cfg, args.suite);
        }
        std::fputs((out.summary + '\n').c_str(), stdout);
        return (args.exit_on_infringe && out.infringing) ? 2 : 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace provlab
