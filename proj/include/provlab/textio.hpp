#pragma once

#include <string>

#include "provlab/attribution.hpp"
#include "provlab/keyselect.hpp"

namespace provlab {

// Human-readable artifact text formats. Shared grammar:
//   - line-oriented, single spaces between tokens, '\n' line ends;
//   - first line: "provlab <kind> <format version>";
//   - floats printed with nine significant digits (%.9g), which reloads to
//     the identical binary32 value;
//   - digests as 64 lowercase hex characters;
//   - tensors as "tensor <rank> <dims...>" followed by the values, eight per
//     line.
// Emission is canonical, so parse-then-serialize reproduces the input bytes
// and a file's digest identifies its content. Parsers reject anything the
// serializers would not emit.

// Key set ("provlab keyset 1"): strategy, selection seed, source/dataset
// digests, then each sample's prompt tokens, score, per-sample origin, and
// reference tensor.
std::string serialize_keyset_text(const KeySampleSet& keys);
KeySampleSet parse_keyset_text(const std::string& text);

// Instance report ("provlab instance-report 1"): digests, thresholds, conf,
// verdict ("infringing" or "clean"), then one key distance per line.
std::string serialize_instance_report(const InstanceReport& report);
InstanceReport parse_instance_report(const std::string& text);

// Statistical report ("provlab statistical-report 1"): digests, model score,
// res bit, then one image score per line.
std::string serialize_statistical_report(const StatisticalReport& report);
StatisticalReport parse_statistical_report(const std::string& text);

// Discriminator ("provlab discriminator 1"): key-set digest, training seed,
// bias, then one feature weight per line.
std::string serialize_discriminator_text(const Discriminator& d);
Discriminator parse_discriminator_text(const std::string& text);

// Shared helpers (also used by the run-config format).
std::string format_f32(float v);               // %.9g
float parse_f32(const std::string& word);      // strict: whole word must parse
uint64_t parse_u64(const std::string& word);   // strict decimal
KeyStrategy parse_strategy(const std::string& word);

}  // namespace provlab
