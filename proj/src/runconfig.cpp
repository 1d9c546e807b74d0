#include "provlab/runconfig.hpp"

#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "provlab/rng.hpp"
#include "provlab/textio.hpp"

namespace provlab {
namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

uint32_t parse_u32(const std::string& word) {
    uint64_t v = parse_u64(word);
    if (v > std::numeric_limits<uint32_t>::max())
        throw std::invalid_argument("value out of range: " + word);
    return uint32_t(v);
}

bool parse_bool01(const std::string& word) {
    if (word == "0") return false;
    if (word == "1") return true;
    throw std::invalid_argument("expected 0 or 1, got '" + word + "'");
}

std::vector<std::string> split_commas(const std::string& value) {
    if (value.empty()) throw std::invalid_argument("empty list value");
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t comma = value.find(',', start);
        std::string part = value.substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start);
        if (part.empty()) throw std::invalid_argument("empty list element in '" + value + "'");
        parts.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return parts;
}

std::vector<float> parse_f32_list(const std::string& value) {
    std::vector<float> out;
    for (const auto& part : split_commas(value)) out.push_back(parse_f32(part));
    return out;
}

std::vector<size_t> parse_u64_list(const std::string& value) {
    std::vector<size_t> out;
    for (const auto& part : split_commas(value)) out.push_back(size_t(parse_u64(part)));
    return out;
}

std::string join_f32(const std::vector<float>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_f32(v[i]);
    }
    return out;
}

std::string join_u64(const std::vector<size_t>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

// One config key: how to print the current value and how to apply a parsed
// one. The table is the single source of truth for key order and spelling.
struct KeyEntry {
    const char* name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<KeyEntry>& key_table() {
    static const std::vector<KeyEntry> table = {
        {"world.seed", [](const RunConfig& c) { return std::to_string(c.world.seed); },
         [](RunConfig& c, const std::string& v) {
             const size_t side = c.world.image_side;
             const float amp = c.world.style_amplitude;
             c.world = WorldConfig::standard(parse_u64(v));
             c.world.image_side = side;
             c.world.style_amplitude = amp;
         }},
        {"world.image_side", [](const RunConfig& c) { return std::to_string(c.world.image_side); },
         [](RunConfig& c, const std::string& v) { c.world.image_side = size_t(parse_u64(v)); }},
        {"world.style_amplitude",
         [](const RunConfig& c) { return format_f32(c.world.style_amplitude); },
         [](RunConfig& c, const std::string& v) { c.world.style_amplitude = parse_f32(v); }},
        {"source.pairs", [](const RunConfig& c) { return std::to_string(c.source_pairs); },
         [](RunConfig& c, const std::string& v) { c.source_pairs = size_t(parse_u64(v)); }},
        {"train.iterations",
         [](const RunConfig& c) { return std::to_string(c.source_train.iterations); },
         [](RunConfig& c, const std::string& v) { c.source_train.iterations = parse_u32(v); }},
        {"train.batch", [](const RunConfig& c) { return std::to_string(c.source_train.batch_size); },
         [](RunConfig& c, const std::string& v) { c.source_train.batch_size = parse_u32(v); }},
        {"train.lr", [](const RunConfig& c) { return format_f32(c.source_train.lr); },
         [](RunConfig& c, const std::string& v) { c.source_train.lr = parse_f32(v); }},
        {"train.t_count", [](const RunConfig& c) { return std::to_string(c.source_train.t_count); },
         [](RunConfig& c, const std::string& v) { c.source_train.t_count = parse_u32(v); }},
        {"train.hidden", [](const RunConfig& c) { return std::to_string(c.source_train.arch.hidden); },
         [](RunConfig& c, const std::string& v) { c.source_train.arch.hidden = size_t(parse_u64(v)); }},
        {"train.embed_dim", [](const RunConfig& c) { return std::to_string(c.source_train.arch.d_e); },
         [](RunConfig& c, const std::string& v) { c.source_train.arch.d_e = size_t(parse_u64(v)); }},
        {"train.time_dim", [](const RunConfig& c) { return std::to_string(c.source_train.arch.d_t); },
         [](RunConfig& c, const std::string& v) { c.source_train.arch.d_t = size_t(parse_u64(v)); }},
        {"train.layers", [](const RunConfig& c) { return std::to_string(c.source_train.arch.layers); },
         [](RunConfig& c, const std::string& v) { c.source_train.arch.layers = size_t(parse_u64(v)); }},
        {"base.pairs", [](const RunConfig& c) { return std::to_string(c.base_pairs); },
         [](RunConfig& c, const std::string& v) { c.base_pairs = size_t(parse_u64(v)); }},
        {"base.iterations", [](const RunConfig& c) { return std::to_string(c.base_iterations); },
         [](RunConfig& c, const std::string& v) { c.base_iterations = parse_u32(v); }},
        {"finetune.iterations",
         [](const RunConfig& c) { return std::to_string(c.finetune.iterations); },
         [](RunConfig& c, const std::string& v) { c.finetune.iterations = parse_u32(v); }},
        {"finetune.batch", [](const RunConfig& c) { return std::to_string(c.finetune.batch_size); },
         [](RunConfig& c, const std::string& v) { c.finetune.batch_size = parse_u32(v); }},
        {"finetune.lr", [](const RunConfig& c) { return format_f32(c.finetune.lr); },
         [](RunConfig& c, const std::string& v) { c.finetune.lr = parse_f32(v); }},
        {"attribution.delta0",
         [](const RunConfig& c) { return format_f32(c.attribution.delta0); },
         [](RunConfig& c, const std::string& v) { c.attribution.delta0 = parse_f32(v); }},
        {"attribution.delta", [](const RunConfig& c) { return format_f32(c.attribution.delta); },
         [](RunConfig& c, const std::string& v) { c.attribution.delta = parse_f32(v); }},
        {"attribution.keys", [](const RunConfig& c) { return std::to_string(c.attribution.key_count); },
         [](RunConfig& c, const std::string& v) { c.attribution.key_count = size_t(parse_u64(v)); }},
        {"attribution.samples_per_prompt",
         [](const RunConfig& c) { return std::to_string(c.attribution.samples_per_prompt); },
         [](RunConfig& c, const std::string& v) {
             c.attribution.samples_per_prompt = size_t(parse_u64(v));
         }},
        {"keygen.seeds", [](const RunConfig& c) { return std::to_string(c.keygen.seeds_count); },
         [](RunConfig& c, const std::string& v) { c.keygen.seeds_count = size_t(parse_u64(v)); }},
        {"keygen.steps", [](const RunConfig& c) { return std::to_string(c.keygen.steps); },
         [](RunConfig& c, const std::string& v) { c.keygen.steps = parse_u32(v); }},
        {"keygen.lr", [](const RunConfig& c) { return format_f32(c.keygen.lr); },
         [](RunConfig& c, const std::string& v) { c.keygen.lr = parse_f32(v); }},
        {"keygen.trials", [](const RunConfig& c) { return std::to_string(c.keygen.mc_trials); },
         [](RunConfig& c, const std::string& v) { c.keygen.mc_trials = parse_u32(v); }},
        {"keygen.slot_constrained",
         [](const RunConfig& c) { return std::string(c.keygen.slot_constrained ? "1" : "0"); },
         [](RunConfig& c, const std::string& v) { c.keygen.slot_constrained = parse_bool01(v); }},
        {"plan.rhos", [](const RunConfig& c) { return join_f32(c.plan_rhos); },
         [](RunConfig& c, const std::string& v) { c.plan_rhos = parse_f32_list(v); }},
        {"plan.repetitions", [](const RunConfig& c) { return std::to_string(c.plan_repetitions); },
         [](RunConfig& c, const std::string& v) { c.plan_repetitions = size_t(parse_u64(v)); }},
        {"plan.suspect_pairs",
         [](const RunConfig& c) { return std::to_string(c.plan_suspect_pairs); },
         [](RunConfig& c, const std::string& v) { c.plan_suspect_pairs = size_t(parse_u64(v)); }},
        {"nsweep.sizes", [](const RunConfig& c) { return join_u64(c.nsweep_sizes); },
         [](RunConfig& c, const std::string& v) { c.nsweep_sizes = parse_u64_list(v); }},
        {"eval.pairs", [](const RunConfig& c) { return std::to_string(c.eval.pairs); },
         [](RunConfig& c, const std::string& v) { c.eval.pairs = size_t(parse_u64(v)); }},
        {"eval.shadows", [](const RunConfig& c) { return std::to_string(c.eval.shadows); },
         [](RunConfig& c, const std::string& v) { c.eval.shadows = size_t(parse_u64(v)); }},
        {"eval.per_class", [](const RunConfig& c) { return std::to_string(c.eval.per_class); },
         [](RunConfig& c, const std::string& v) { c.eval.per_class = size_t(parse_u64(v)); }},
        {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
        {"jobs", [](const RunConfig& c) { return std::to_string(c.jobs); },
         [](RunConfig& c, const std::string& v) { c.jobs = size_t(parse_u64(v)); }},
        {"out", [](const RunConfig& c) { return c.out_dir; },
         [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

const KeyEntry* find_key(const std::string& name) {
    for (const auto& entry : key_table())
        if (name == entry.name) return &entry;
    return nullptr;
}

}  // namespace

RunConfig parse_runconfig(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        const KeyEntry* entry = find_key(key);
        if (entry == nullptr)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": duplicate key '" + key + "'");
        try {
            entry->set(cfg, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    cfg.source_train.arch.pixels = cfg.world.pixel_count();
    cfg.finetune.arch = cfg.source_train.arch;
    cfg.finetune.t_count = cfg.source_train.t_count;
    return cfg;
}

std::string serialize_runconfig(const RunConfig& config) {
    std::string out;
    for (const auto& entry : key_table()) {
        const std::string value = entry.get(config);
        out += entry.name;
        out += " =";
        if (!value.empty()) {
            out += ' ';
            out += value;
        }
        out += '\n';
    }
    return out;
}

void RunConfig::validate() const {
    world.validate();
    attribution.validate();
    if (source_pairs == 0) throw std::invalid_argument("source.pairs must be positive");
    if (base_pairs == 0) throw std::invalid_argument("base.pairs must be positive");
    if (source_train.iterations == 0 || base_iterations == 0 || finetune.iterations == 0)
        throw std::invalid_argument("iteration counts must be positive");
    if (source_train.batch_size == 0 || finetune.batch_size == 0)
        throw std::invalid_argument("batch sizes must be positive");
    if (source_train.t_count < 2) throw std::invalid_argument("train.t_count must be at least 2");
    if (!(source_train.lr > 0.f) || !(finetune.lr > 0.f) || !(keygen.lr > 0.f))
        throw std::invalid_argument("learning rates must be positive");
    if (source_train.arch.pixels != world.pixel_count())
        throw std::invalid_argument("model pixel count does not match the world image size");
    if (plan_rhos.empty()) throw std::invalid_argument("plan.rhos must not be empty");
    for (float r : plan_rhos)
        if (!(r > 0.f) || r > 1.f)
            throw std::invalid_argument("plan.rhos entries must be in (0, 1]");
    if (plan_repetitions == 0) throw std::invalid_argument("plan.repetitions must be positive");
    if (plan_suspect_pairs == 0) throw std::invalid_argument("plan.suspect_pairs must be positive");
    if (nsweep_sizes.empty()) throw std::invalid_argument("nsweep.sizes must not be empty");
    for (size_t n : nsweep_sizes)
        if (n == 0 || n > attribution.key_count)
            throw std::invalid_argument("nsweep.sizes entries must be in 1..attribution.keys");
    if (eval.pairs == 0 || eval.shadows == 0 || eval.per_class == 0)
        throw std::invalid_argument("eval sizes must be positive");
    if (jobs == 0) throw std::invalid_argument("jobs must be positive");
}

ExperimentPlan RunConfig::plan() const {
    ExperimentPlan p;
    p.rho_values = plan_rhos;
    p.repetitions = plan_repetitions;
    p.suspect_pairs = plan_suspect_pairs;
    p.finetune = finetune;
    p.attribution = attribution;
    p.seed = derive_seed(seed, "cli-plan");
    return p;
}

}  // namespace provlab
