#include "provlab/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "provlab/rng.hpp"

namespace provlab {

namespace {

constexpr const char* kSlotNames[Vocabulary::kSlots] = {
    "shape", "size", "intensity", "x-position", "y-position"};

constexpr const char* kWords[Vocabulary::kSlots][Vocabulary::kValuesPerSlot] = {
    {"circle", "square", "triangle", "cross"},
    {"tiny", "small", "medium", "large"},
    {"dark", "faint", "dim", "bright"},
    {"right", "midright", "midleft", "left"},
    {"top", "midtop", "midbottom", "bottom"},
};

}  // namespace

const char* Vocabulary::slot_name(size_t slot) {
    if (slot >= kSlots) throw std::invalid_argument("slot out of range");
    return kSlotNames[slot];
}

const char* Vocabulary::word(size_t slot, size_t value) {
    if (slot >= kSlots || value >= kValuesPerSlot) {
        throw std::invalid_argument("token (" + std::to_string(slot) + "," +
                                    std::to_string(value) + ") out of range");
    }
    return kWords[slot][value];
}

size_t Vocabulary::token_id(size_t slot, size_t value) {
    if (slot >= kSlots || value >= kValuesPerSlot) {
        throw std::invalid_argument("token (" + std::to_string(slot) + "," +
                                    std::to_string(value) + ") out of range");
    }
    return slot * kValuesPerSlot + value;
}

std::pair<size_t, size_t> Vocabulary::lookup(std::string_view w) {
    for (size_t s = 0; s < kSlots; ++s) {
        for (size_t v = 0; v < kValuesPerSlot; ++v) {
            if (w == kWords[s][v]) return {s, v};
        }
    }
    throw std::invalid_argument("unknown word '" + std::string(w) + "'");
}

uint16_t Prompt::index() const {
    uint16_t idx = 0;
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        idx = uint16_t(idx * Vocabulary::kValuesPerSlot + tokens[s]);
    }
    return idx;
}

Prompt Prompt::from_index(uint16_t idx) {
    if (idx >= combo_count()) {
        throw std::invalid_argument("prompt index " + std::to_string(idx) + " out of range");
    }
    Prompt p;
    for (size_t s = Vocabulary::kSlots; s-- > 0;) {
        p.tokens[s] = uint8_t(idx % Vocabulary::kValuesPerSlot);
        idx = uint16_t(idx / Vocabulary::kValuesPerSlot);
    }
    return p;
}

std::vector<size_t> Prompt::token_ids() const {
    std::vector<size_t> ids(Vocabulary::kSlots);
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        ids[s] = Vocabulary::token_id(s, tokens[s]);
    }
    return ids;
}

uint64_t Prompt::hash() const {
    return fnv1a64(prompt_to_text(*this));
}

std::string prompt_to_text(const Prompt& p) {
    std::string out;
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        if (s) out += ' ';
        if (p.tokens[s] >= Vocabulary::kValuesPerSlot) {
            throw std::invalid_argument("prompt token out of range in slot " +
                                        std::to_string(s));
        }
        out += kWords[s][p.tokens[s]];
    }
    return out;
}

Prompt prompt_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<std::string> words;
    std::string w;
    while (in >> w) words.push_back(w);
    if (words.size() != Vocabulary::kSlots) {
        throw std::invalid_argument("prompt must have " + std::to_string(Vocabulary::kSlots) +
                                    " words, got " + std::to_string(words.size()));
    }
    Prompt p;
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        auto [slot, value] = Vocabulary::lookup(words[s]);
        if (slot != s) {
            throw std::invalid_argument("word '" + words[s] + "' belongs to the " +
                                        kSlotNames[slot] + " slot, found in position " +
                                        std::to_string(s));
        }
        p.tokens[s] = uint8_t(value);
    }
    return p;
}

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::Real: return "real";
        case Origin::SourceGenerated: return "source-generated";
        case Origin::OtherGenerated: return "other-generated";
    }
    throw std::invalid_argument("bad origin tag");
}

bool WorldConfig::is_private(const Prompt& p) const {
    return std::binary_search(private_combos.begin(), private_combos.end(), p.index());
}

void WorldConfig::validate() const {
    if (image_side < 4) throw std::invalid_argument("image side must be at least 4");
    if (private_combos.empty()) {
        throw std::invalid_argument("private combo list must be nonempty");
    }
    if (!std::is_sorted(private_combos.begin(), private_combos.end())) {
        throw std::invalid_argument("private combo list must be sorted");
    }
    if (std::adjacent_find(private_combos.begin(), private_combos.end()) !=
        private_combos.end()) {
        throw std::invalid_argument("private combo list has duplicates");
    }
    if (private_combos.back() >= Prompt::combo_count()) {
        throw std::invalid_argument("private combo index out of range");
    }
}

WorldConfig WorldConfig::standard(uint64_t seed) {
    WorldConfig cfg;
    cfg.seed = seed;
    const size_t total = Prompt::combo_count();
    std::vector<uint16_t> all(total);
    std::iota(all.begin(), all.end(), uint16_t(0));
    Rng rng(derive_seed(seed, "private-partition"));
    // Fisher-Yates, then reserve the first quarter as private
    for (size_t i = total; i-- > 1;) {
        size_t j = size_t(rng.next_below(i + 1));
        std::swap(all[i], all[j]);
    }
    cfg.private_combos.assign(all.begin(), all.begin() + total / 4);
    std::sort(cfg.private_combos.begin(), cfg.private_combos.end());
    cfg.validate();
    return cfg;
}

namespace {

struct Vec2 {
    float x, y;
};

float sdf_circle(Vec2 p, float r) {
    return std::sqrt(p.x * p.x + p.y * p.y) - r;
}

float sdf_square(Vec2 p, float r) {
    return std::max(std::abs(p.x), std::abs(p.y)) - r;
}

// Upward-pointing triangle inscribed in radius r, as the intersection of
// three half-planes: exact inside, accurate near edges (the anti-aliasing
// band), slightly conservative past the corners.
float sdf_triangle(Vec2 p, float r) {
    const float kx = 0.8660254f, ky = 0.5f;  // base corners (+-kx*r, ky*r), apex (0,-r)
    float base = p.y - ky * r;
    // edge apex -> right corner; outward normal, mirrored for the left edge
    Vec2 a{0.0f, -r};
    Vec2 d{kx * r, ky * r + r};
    float len = std::sqrt(d.x * d.x + d.y * d.y);
    Vec2 n{d.y / len, -d.x / len};
    float e_right = n.x * (p.x - a.x) + n.y * (p.y - a.y);
    float e_left = n.x * (-p.x - a.x) + n.y * (p.y - a.y);
    return std::max(base, std::max(e_right, e_left));
}

// union of two axis-aligned bars
float sdf_cross(Vec2 p, float r) {
    float bar = r * 0.38f;
    float horiz = std::max(std::abs(p.x) - r, std::abs(p.y) - bar);
    float vert = std::max(std::abs(p.x) - bar, std::abs(p.y) - r);
    return std::min(horiz, vert);
}

}  // namespace

Tensor render(const Prompt& prompt, const WorldConfig& config) {
    for (size_t s = 0; s < Vocabulary::kSlots; ++s) {
        if (prompt.tokens[s] >= Vocabulary::kValuesPerSlot) {
            throw std::invalid_argument("invalid token " + std::to_string(prompt.tokens[s]) +
                                        " in slot " + std::to_string(s));
        }
    }
    const size_t side = config.image_side;
    const float span = float(side);
    const uint8_t shape = prompt.tokens[0];
    const float radius = (1.8f + 0.8f * float(prompt.tokens[1])) * span / 16.0f;
    const float intensity = 0.25f * float(prompt.tokens[2] + 1);
    // x value 0 = right, y value 0 = top
    const float step = (span - 9.0f * span / 16.0f) / 3.0f;
    const float cx = span - 4.5f * span / 16.0f - step * float(prompt.tokens[3]);
    const float cy = 4.5f * span / 16.0f + step * float(prompt.tokens[4]);

    Tensor img({side * side});
    for (size_t row = 0; row < side; ++row) {
        for (size_t col = 0; col < side; ++col) {
            Vec2 p{float(col) + 0.5f - cx, float(row) + 0.5f - cy};
            float d;
            switch (shape) {
                case 0: d = sdf_circle(p, radius); break;
                case 1: d = sdf_square(p, radius); break;
                case 2: d = sdf_triangle(p, radius); break;
                default: d = sdf_cross(p, radius); break;
            }
            // 1-pixel anti-aliased edge
            float coverage = std::clamp(0.5f - d, 0.0f, 1.0f);
            img.at(row * side + col) = intensity * coverage;
        }
    }

    // Fixed per-combo style texture: the memorizable fingerprint. Zero-mean
    // by construction so the intensity ordering stays monotone.
    Rng style(derive_seed(config.seed, "style-texture", prompt.index()));
    std::vector<float> tex(side * side);
    double mean = 0.0;
    for (float& t : tex) {
        t = style.next_uniform(-1.0f, 1.0f);
        mean += t;
    }
    mean /= double(tex.size());
    for (size_t i = 0; i < tex.size(); ++i) {
        float v = img.at(i) + config.style_amplitude * (tex[i] - float(mean));
        img.at(i) = std::clamp(v, 0.0f, 1.0f);
    }
    return img;
}

std::vector<Prompt> partition_prompts(const WorldConfig& config, Partition partition) {
    config.validate();
    std::vector<Prompt> out;
    for (size_t idx = 0; idx < Prompt::combo_count(); ++idx) {
        Prompt p = Prompt::from_index(uint16_t(idx));
        bool priv = config.is_private(p);
        if (partition == Partition::All || (partition == Partition::Private && priv) ||
            (partition == Partition::Public && !priv)) {
            out.push_back(p);
        }
    }
    if (out.empty()) throw std::invalid_argument("empty partition");
    return out;
}

std::vector<Prompt> sample_prompts(const WorldConfig& config, Partition partition,
                                   size_t count, uint64_t seed) {
    std::vector<Prompt> pool = partition_prompts(config, partition);
    if (count > pool.size()) {
        throw std::invalid_argument("requested " + std::to_string(count) +
                                    " prompts from a partition of " +
                                    std::to_string(pool.size()));
    }
    Rng rng(derive_seed(seed, "dataset-sample"));
    for (size_t i = pool.size(); i-- > 1;) {
        size_t j = size_t(rng.next_below(i + 1));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

std::vector<LabeledPair> build_dataset(const WorldConfig& config, size_t count,
                                       Partition partition, uint64_t seed) {
    std::vector<Prompt> prompts = sample_prompts(config, partition, count, seed);
    std::vector<LabeledPair> out;
    out.reserve(prompts.size());
    for (const Prompt& p : prompts) {
        out.push_back(LabeledPair{p, render(p, config), Origin::Real});
    }
    return out;
}

}  // namespace provlab
