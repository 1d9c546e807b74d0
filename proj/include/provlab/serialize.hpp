#pragma once

#include <string>
#include <vector>

#include "provlab/diffusion.hpp"
#include "provlab/sha256.hpp"
#include "provlab/world.hpp"

namespace provlab {

// Canonical binary container: 8-byte magic, format version, record kind, then
// length-prefixed little-endian payload. Serialization is byte-deterministic,
// so a record's digest identifies its content.

std::string serialize_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint parse_checkpoint(const std::string& bytes);
Digest checkpoint_digest(const ModelCheckpoint& ckpt);

// `generator` names the checkpoint whose generations appear among the pairs
// (provenance); the zero digest marks a dataset of pure ground-truth renders.
std::string serialize_dataset(const std::vector<LabeledPair>& pairs,
                              const WorldConfig& world,
                              const Digest& generator = Digest{});
std::vector<LabeledPair> parse_dataset(const std::string& bytes, WorldConfig* world_out,
                                       Digest* generator_out = nullptr);
Digest dataset_digest(const std::vector<LabeledPair>& pairs);

// Low-level byte plumbing shared by the binary formats.
namespace wire {

void put_u8(std::string& out, uint8_t v);
void put_u16(std::string& out, uint16_t v);
void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_f32(std::string& out, float v);
void put_bytes(std::string& out, const void* data, size_t len);
void put_tensor(std::string& out, const Tensor& t);

class Reader {
public:
    explicit Reader(const std::string& bytes) : data_(bytes) {}
    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    float f32();
    void bytes(void* dst, size_t len);
    Tensor tensor();
    bool done() const { return pos_ == data_.size(); }
    void expect_done() const;

private:
    void need(size_t n) const;
    const std::string& data_;
    size_t pos_ = 0;
};

}  // namespace wire

}  // namespace provlab
