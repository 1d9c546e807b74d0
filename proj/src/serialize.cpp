#include "provlab/serialize.hpp"

#include <cstring>
#include <stdexcept>

namespace provlab {

namespace wire {

void put_u8(std::string& out, uint8_t v) {
    out.push_back(char(v));
}

void put_u16(std::string& out, uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

void put_bytes(std::string& out, const void* data, size_t len) {
    out.append(static_cast<const char*>(data), len);
}

void put_tensor(std::string& out, const Tensor& t) {
    put_u32(out, uint32_t(t.rank()));
    for (size_t d : t.shape()) put_u32(out, uint32_t(d));
    for (size_t i = 0; i < t.numel(); ++i) put_f32(out, t.at(i));
}

void Reader::need(size_t n) const {
    if (pos_ + n > data_.size()) {
        throw std::invalid_argument("truncated record: need " + std::to_string(n) +
                                    " bytes at offset " + std::to_string(pos_));
    }
}

uint8_t Reader::u8() {
    need(1);
    return uint8_t(data_[pos_++]);
}

uint16_t Reader::u16() {
    need(2);
    uint16_t v = uint16_t(uint8_t(data_[pos_])) | (uint16_t(uint8_t(data_[pos_ + 1])) << 8);
    pos_ += 2;
    return v;
}

uint32_t Reader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
}

uint64_t Reader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
}

float Reader::f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void Reader::bytes(void* dst, size_t len) {
    need(len);
    std::memcpy(dst, data_.data() + pos_, len);
    pos_ += len;
}

Tensor Reader::tensor() {
    uint32_t rank = u32();
    if (rank > 4) throw std::invalid_argument("tensor rank " + std::to_string(rank));
    std::vector<size_t> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = u32();
    size_t n = shape_numel(shape);
    if (n > (1u << 28)) throw std::invalid_argument("tensor too large");
    std::vector<float> data(n);
    for (size_t i = 0; i < n; ++i) data[i] = f32();
    return Tensor(std::move(shape), std::move(data));
}

void Reader::expect_done() const {
    if (!done()) {
        throw std::invalid_argument("trailing bytes after record payload");
    }
}

}  // namespace wire

namespace {

constexpr char kMagic[8] = {'P', 'L', 'A', 'B', 'B', 'I', 'N', '\0'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kKindCheckpoint = 1;
constexpr uint32_t kKindDataset = 2;

void put_header(std::string& out, uint32_t kind) {
    wire::put_bytes(out, kMagic, 8);
    wire::put_u32(out, kVersion);
    wire::put_u32(out, kind);
}

void read_header(wire::Reader& r, uint32_t expected_kind) {
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) {
        throw std::invalid_argument("bad magic: not a lab binary record");
    }
    uint32_t version = r.u32();
    if (version != kVersion) {
        throw std::invalid_argument("unsupported record version " + std::to_string(version));
    }
    uint32_t kind = r.u32();
    if (kind != expected_kind) {
        throw std::invalid_argument("record kind " + std::to_string(kind) + ", expected " +
                                    std::to_string(expected_kind));
    }
}

void put_world(std::string& out, const WorldConfig& world) {
    wire::put_u32(out, uint32_t(world.image_side));
    wire::put_f32(out, world.style_amplitude);
    wire::put_u64(out, world.seed);
    wire::put_u32(out, uint32_t(world.private_combos.size()));
    for (uint16_t idx : world.private_combos) wire::put_u16(out, idx);
}

WorldConfig read_world(wire::Reader& r) {
    WorldConfig world;
    world.image_side = r.u32();
    world.style_amplitude = r.f32();
    world.seed = r.u64();
    uint32_t n = r.u32();
    world.private_combos.resize(n);
    for (uint32_t i = 0; i < n; ++i) world.private_combos[i] = r.u16();
    world.validate();
    return world;
}

void put_digest(std::string& out, const Digest& d) {
    wire::put_bytes(out, d.bytes.data(), d.bytes.size());
}

Digest read_digest(wire::Reader& r) {
    Digest d;
    r.bytes(d.bytes.data(), d.bytes.size());
    return d;
}

}  // namespace

std::string serialize_checkpoint(const ModelCheckpoint& ckpt) {
    std::string out;
    put_header(out, kKindCheckpoint);
    put_world(out, ckpt.world);

    const NoiseSchedule& s = ckpt.schedule;
    wire::put_u32(out, s.t_count);
    for (float b : s.beta) wire::put_f32(out, b);
    for (float a : s.alpha) wire::put_f32(out, a);
    for (float ab : s.alpha_bar) wire::put_f32(out, ab);

    const DenoiserConfig& cfg = ckpt.net.config();
    wire::put_u32(out, uint32_t(cfg.pixels));
    wire::put_u32(out, uint32_t(cfg.d_e));
    wire::put_u32(out, uint32_t(cfg.d_t));
    wire::put_u32(out, uint32_t(cfg.hidden));
    wire::put_u32(out, uint32_t(cfg.layers));
    wire::put_u32(out, uint32_t(cfg.vocab));

    auto params = ckpt.net.params();
    wire::put_u32(out, uint32_t(params.size()));
    for (const Tensor* p : params) wire::put_tensor(out, *p);

    put_digest(out, ckpt.provenance.dataset_digest);
    put_digest(out, ckpt.provenance.parent);
    wire::put_f32(out, ckpt.provenance.rho);
    wire::put_u64(out, ckpt.provenance.train_seed);
    wire::put_u32(out, ckpt.provenance.iterations);

    wire::put_u32(out, uint32_t(ckpt.loss_trace.size()));
    for (float v : ckpt.loss_trace) wire::put_f32(out, v);
    return out;
}

ModelCheckpoint parse_checkpoint(const std::string& bytes) {
    wire::Reader r(bytes);
    read_header(r, kKindCheckpoint);
    ModelCheckpoint ckpt;
    ckpt.world = read_world(r);

    NoiseSchedule s;
    s.t_count = r.u32();
    if (s.t_count == 0 || s.t_count > 100000) {
        throw std::invalid_argument("bad schedule length");
    }
    s.beta.resize(s.t_count);
    s.alpha.resize(s.t_count);
    s.alpha_bar.resize(s.t_count);
    for (float& v : s.beta) v = r.f32();
    for (float& v : s.alpha) v = r.f32();
    for (float& v : s.alpha_bar) v = r.f32();
    s.validate();
    ckpt.schedule = std::move(s);

    DenoiserConfig cfg;
    cfg.pixels = r.u32();
    cfg.d_e = r.u32();
    cfg.d_t = r.u32();
    cfg.hidden = r.u32();
    cfg.layers = r.u32();
    cfg.vocab = r.u32();

    uint32_t n_params = r.u32();
    if (n_params != 1 + 2 * (cfg.layers + 1)) {
        throw std::invalid_argument("parameter count does not match architecture");
    }
    Tensor embed = r.tensor();
    std::vector<Tensor> w, b;
    for (size_t l = 0; l < cfg.layers + 1; ++l) {
        w.push_back(r.tensor());
        b.push_back(r.tensor());
    }
    ckpt.net = DenoiserNet(cfg, std::move(embed), std::move(w), std::move(b));

    ckpt.provenance.dataset_digest = read_digest(r);
    ckpt.provenance.parent = read_digest(r);
    ckpt.provenance.rho = r.f32();
    ckpt.provenance.train_seed = r.u64();
    ckpt.provenance.iterations = r.u32();

    uint32_t n_trace = r.u32();
    ckpt.loss_trace.resize(n_trace);
    for (float& v : ckpt.loss_trace) v = r.f32();
    r.expect_done();
    return ckpt;
}

Digest checkpoint_digest(const ModelCheckpoint& ckpt) {
    return sha256(serialize_checkpoint(ckpt));
}

std::string serialize_dataset(const std::vector<LabeledPair>& pairs,
                              const WorldConfig& world, const Digest& generator) {
    std::string out;
    put_header(out, kKindDataset);
    put_world(out, world);
    wire::put_bytes(out, generator.bytes.data(), generator.bytes.size());
    wire::put_u32(out, uint32_t(pairs.size()));
    for (const LabeledPair& pair : pairs) {
        wire::put_u16(out, pair.prompt.index());
        wire::put_u8(out, uint8_t(pair.origin));
        wire::put_tensor(out, pair.image);
    }
    return out;
}

std::vector<LabeledPair> parse_dataset(const std::string& bytes, WorldConfig* world_out,
                                       Digest* generator_out) {
    wire::Reader r(bytes);
    read_header(r, kKindDataset);
    WorldConfig world = read_world(r);
    if (world_out) *world_out = world;
    Digest generator;
    r.bytes(generator.bytes.data(), generator.bytes.size());
    if (generator_out) *generator_out = generator;
    uint32_t n = r.u32();
    std::vector<LabeledPair> pairs;
    pairs.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        LabeledPair pair;
        pair.prompt = Prompt::from_index(r.u16());
        uint8_t tag = r.u8();
        if (tag > uint8_t(Origin::OtherGenerated)) {
            throw std::invalid_argument("bad origin tag " + std::to_string(tag));
        }
        pair.origin = Origin(tag);
        pair.image = r.tensor();
        pairs.push_back(std::move(pair));
    }
    r.expect_done();
    return pairs;
}

Digest dataset_digest(const std::vector<LabeledPair>& pairs) {
    // digest of the pair payload alone (no world header): identifies the
    // training data independent of which world object carried it
    std::string out;
    wire::put_u32(out, uint32_t(pairs.size()));
    for (const LabeledPair& pair : pairs) {
        wire::put_u16(out, pair.prompt.index());
        wire::put_u8(out, uint8_t(pair.origin));
        wire::put_tensor(out, pair.image);
    }
    return sha256(out);
}

}  // namespace provlab
