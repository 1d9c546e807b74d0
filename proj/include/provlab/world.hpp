#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "provlab/tensor.hpp"

namespace provlab {

// The prompt grammar: S fixed attribute slots, K values each. Token ids are
// dense: slot*K + value, with one trailing pad id.
class Vocabulary {
public:
    static constexpr size_t kSlots = 5;
    static constexpr size_t kValuesPerSlot = 4;
    static constexpr size_t kPadToken = kSlots * kValuesPerSlot;  // 20
    static constexpr size_t kVocabSize = kSlots * kValuesPerSlot + 1;  // 21

    static const char* slot_name(size_t slot);
    static const char* word(size_t slot, size_t value);
    static size_t token_id(size_t slot, size_t value);
    // (slot, value) for a word, or throws std::invalid_argument
    static std::pair<size_t, size_t> lookup(std::string_view word);
};

// One point of the prompt lattice: a value per slot
// (shape, size, intensity, x-position, y-position).
struct Prompt {
    std::array<uint8_t, Vocabulary::kSlots> tokens{};

    // base-K index in 0..K^S-1
    uint16_t index() const;
    static Prompt from_index(uint16_t idx);
    static constexpr size_t combo_count() {  // K^S
        size_t n = 1;
        for (size_t s = 0; s < Vocabulary::kSlots; ++s) n *= Vocabulary::kValuesPerSlot;
        return n;
    }

    std::vector<size_t> token_ids() const;  // dense ids, one per slot
    uint64_t hash() const;                  // stable content hash

    bool operator==(const Prompt&) const = default;
    auto operator<=>(const Prompt&) const = default;
};

std::string prompt_to_text(const Prompt& p);
Prompt prompt_from_text(std::string_view text);

enum class Origin : uint8_t {
    Real = 0,
    SourceGenerated = 1,
    OtherGenerated = 2,
};

const char* origin_name(Origin o);

struct LabeledPair {
    Prompt prompt;
    Tensor image;  // [side*side], values in [0,1]
    Origin origin = Origin::Real;
};

enum class Partition : uint8_t {
    Public = 0,
    Private = 1,
    All = 2,
};

// World parameters: image geometry, the per-combo style texture amplitude,
// and which attribute combos are reserved as the private sub-distribution.
struct WorldConfig {
    size_t image_side = 16;
    float style_amplitude = 0.15f;
    uint64_t seed = 0;
    std::vector<uint16_t> private_combos;  // sorted prompt indices

    size_t pixel_count() const { return image_side * image_side; }
    bool is_private(const Prompt& p) const;
    void validate() const;

    // The standard lab world: 25% of combos drawn into the private partition
    // by a seeded shuffle.
    static WorldConfig standard(uint64_t seed);
};

// Deterministic ground-truth image for a prompt: an anti-aliased filled
// primitive at the encoded position/size/intensity plus the combo's fixed
// zero-mean style texture.
Tensor render(const Prompt& prompt, const WorldConfig& config);

std::vector<Prompt> partition_prompts(const WorldConfig& config, Partition partition);

// `count` distinct prompts sampled uniformly without replacement.
std::vector<Prompt> sample_prompts(const WorldConfig& config, Partition partition,
                                   size_t count, uint64_t seed);

std::vector<LabeledPair> build_dataset(const WorldConfig& config, size_t count,
                                       Partition partition, uint64_t seed);

}  // namespace provlab
