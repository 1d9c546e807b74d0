#include "provlab/textio.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <vector>

namespace provlab {
namespace {

// ---- emission -------------------------------------------------------------

void emit_tensor(std::string& out, const Tensor& t) {
    out += "tensor ";
    out += std::to_string(t.rank());
    for (size_t d = 0; d < t.rank(); ++d) {
        out += ' ';
        out += std::to_string(t.dim(d));
    }
    out += '\n';
    for (size_t i = 0; i < t.numel(); ++i) {
        out += format_f32(t.at(i));
        out += (i + 1) % 8 == 0 || i + 1 == t.numel() ? '\n' : ' ';
    }
}

// ---- parsing --------------------------------------------------------------

// Splits into lines, then hands out one whitespace-tokenized line at a time.
class LineReader {
public:
    explicit LineReader(const std::string& text) {
        size_t start = 0;
        while (start < text.size()) {
            size_t end = text.find('\n', start);
            if (end == std::string::npos) {
                throw std::runtime_error("text artifact: missing final newline");
            }
            lines_.push_back(text.substr(start, end - start));
            start = end + 1;
        }
    }

    std::vector<std::string> next(const char* what) {
        if (pos_ >= lines_.size()) {
            throw std::runtime_error(std::string("text artifact: expected ") + what +
                                     ", got end of file");
        }
        const std::string& line = lines_[pos_++];
        std::vector<std::string> words;
        size_t i = 0;
        while (i < line.size()) {
            size_t j = line.find(' ', i);
            if (j == std::string::npos) j = line.size();
            if (j == i) throw std::runtime_error("text artifact: stray space in line '" +
                                                 line + "'");
            words.push_back(line.substr(i, j - i));
            i = j + 1;
        }
        if (words.empty()) {
            throw std::runtime_error(std::string("text artifact: blank line where ") +
                                     what + " was expected");
        }
        return words;
    }

    void expect_done() const {
        if (pos_ != lines_.size()) {
            throw std::runtime_error("text artifact: trailing content after record");
        }
    }

private:
    std::vector<std::string> lines_;
    size_t pos_ = 0;
};

// A "<label> <value...>" line with an exact word count.
std::vector<std::string> labeled(LineReader& in, const char* label, size_t words) {
    std::vector<std::string> w = in.next(label);
    if (w[0] != label || w.size() != words) {
        throw std::runtime_error(std::string("text artifact: expected '") + label +
                                 "' line, got '" + w[0] + "'");
    }
    return w;
}

void expect_header(LineReader& in, const char* kind) {
    std::vector<std::string> w = in.next("header");
    if (w.size() != 3 || w[0] != "provlab" || w[1] != kind || w[2] != "1") {
        throw std::runtime_error(std::string("text artifact: expected 'provlab ") + kind +
                                 " 1' header");
    }
}

Digest parse_digest(const std::string& word) {
    if (word.size() != 64) throw std::runtime_error("digest must be 64 hex characters");
    return Digest::from_hex(word);
}

Tensor parse_tensor(LineReader& in) {
    std::vector<std::string> head = in.next("tensor header");
    if (head[0] != "tensor" || head.size() < 2) {
        throw std::runtime_error("text artifact: expected 'tensor' line");
    }
    const size_t rank = size_t(parse_u64(head[1]));
    if (head.size() != 2 + rank) {
        throw std::runtime_error("text artifact: tensor rank/dims mismatch");
    }
    std::vector<size_t> dims;
    size_t numel = 1;
    for (size_t d = 0; d < rank; ++d) {
        dims.push_back(size_t(parse_u64(head[2 + d])));
        numel *= dims.back();
    }
    Tensor t(dims);
    size_t i = 0;
    while (i < numel) {
        std::vector<std::string> row = in.next("tensor values");
        const size_t expect = std::min<size_t>(8, numel - i);
        if (row.size() != expect) {
            throw std::runtime_error("text artifact: tensor value row has wrong width");
        }
        for (const std::string& w : row) t.at(i++) = parse_f32(w);
    }
    return t;
}

int parse_bit(const std::string& word) {
    if (word == "0") return 0;
    if (word == "1") return 1;
    throw std::runtime_error("expected 0 or 1, got '" + word + "'");
}

}  // namespace

std::string format_f32(float v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", double(v));
    return buf;
}

float parse_f32(const std::string& word) {
    errno = 0;
    char* end = nullptr;
    const float v = std::strtof(word.c_str(), &end);
    // ERANGE with a finite result is gradual underflow to a denormal, which
    // round-trips fine; ERANGE with an infinite result is a real overflow.
    if (word.empty() || end != word.c_str() + word.size() ||
        (errno == ERANGE && !std::isfinite(v))) {
        throw std::runtime_error("bad float '" + word + "'");
    }
    return v;
}

uint64_t parse_u64(const std::string& word) {
    if (word.empty() || word.find_first_not_of("0123456789") != std::string::npos) {
        throw std::runtime_error("bad integer '" + word + "'");
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(word.c_str(), &end, 10);
    if (errno != 0 || end != word.c_str() + word.size()) {
        throw std::runtime_error("bad integer '" + word + "'");
    }
    return v;
}

KeyStrategy parse_strategy(const std::string& word) {
    if (word == "detect") return KeyStrategy::Detect;
    if (word == "generate") return KeyStrategy::Generate;
    if (word == "random") return KeyStrategy::Random;
    throw std::runtime_error("unknown key strategy '" + word + "'");
}

std::string serialize_keyset_text(const KeySampleSet& keys) {
    std::string out = "provlab keyset 1\n";
    out += "strategy ";
    out += strategy_name(keys.strategy);
    out += '\n';
    out += "selection_seed " + std::to_string(keys.selection_seed) + '\n';
    out += "source " + keys.source_digest.hex() + '\n';
    out += "dataset " + keys.dataset_digest.hex() + '\n';
    out += "samples " + std::to_string(keys.samples.size()) + '\n';
    for (size_t k = 0; k < keys.samples.size(); ++k) {
        const KeySample& s = keys.samples[k];
        out += "sample " + std::to_string(k) + '\n';
        out += "prompt";
        for (uint8_t tok : s.prompt.tokens) out += ' ' + std::to_string(tok);
        out += '\n';
        out += "score " + format_f32(s.score) + '\n';
        out += "origin ";
        out += strategy_name(s.strategy);
        out += '\n';
        emit_tensor(out, s.reference);
    }
    return out;
}

KeySampleSet parse_keyset_text(const std::string& text) {
    LineReader in(text);
    expect_header(in, "keyset");
    KeySampleSet keys;
    keys.strategy = parse_strategy(labeled(in, "strategy", 2)[1]);
    keys.selection_seed = parse_u64(labeled(in, "selection_seed", 2)[1]);
    keys.source_digest = parse_digest(labeled(in, "source", 2)[1]);
    keys.dataset_digest = parse_digest(labeled(in, "dataset", 2)[1]);
    const size_t count = size_t(parse_u64(labeled(in, "samples", 2)[1]));
    keys.samples.reserve(count);
    for (size_t k = 0; k < count; ++k) {
        if (parse_u64(labeled(in, "sample", 2)[1]) != k) {
            throw std::runtime_error("keyset text: samples out of order");
        }
        KeySample s;
        std::vector<std::string> pw = labeled(in, "prompt", 1 + Vocabulary::kSlots);
        for (size_t i = 0; i < Vocabulary::kSlots; ++i) {
            const uint64_t tok = parse_u64(pw[1 + i]);
            if (tok >= Vocabulary::kValuesPerSlot) {
                throw std::runtime_error("keyset text: token out of range");
            }
            s.prompt.tokens[i] = uint8_t(tok);
        }
        s.score = parse_f32(labeled(in, "score", 2)[1]);
        s.strategy = parse_strategy(labeled(in, "origin", 2)[1]);
        s.reference = parse_tensor(in);
        keys.samples.push_back(std::move(s));
    }
    in.expect_done();
    return keys;
}

std::string serialize_instance_report(const InstanceReport& report) {
    std::string out = "provlab instance-report 1\n";
    out += "source " + report.source_digest.hex() + '\n';
    out += "suspect " + report.suspect_digest.hex() + '\n';
    out += "keys " + report.keys_digest.hex() + '\n';
    out += "strategy ";
    out += strategy_name(report.strategy);
    out += '\n';
    out += "delta0 " + format_f32(report.delta0) + '\n';
    out += "delta " + format_f32(report.delta) + '\n';
    out += "conf " + format_f32(report.conf) + '\n';
    out += "verdict ";
    out += report.verdict ? "infringing" : "clean";
    out += '\n';
    out += "distances " + std::to_string(report.distances.size()) + '\n';
    for (float d : report.distances) {
        out += format_f32(d);
        out += '\n';
    }
    return out;
}

InstanceReport parse_instance_report(const std::string& text) {
    LineReader in(text);
    expect_header(in, "instance-report");
    InstanceReport rep;
    rep.source_digest = parse_digest(labeled(in, "source", 2)[1]);
    rep.suspect_digest = parse_digest(labeled(in, "suspect", 2)[1]);
    rep.keys_digest = parse_digest(labeled(in, "keys", 2)[1]);
    rep.strategy = parse_strategy(labeled(in, "strategy", 2)[1]);
    rep.delta0 = parse_f32(labeled(in, "delta0", 2)[1]);
    rep.delta = parse_f32(labeled(in, "delta", 2)[1]);
    rep.conf = parse_f32(labeled(in, "conf", 2)[1]);
    const std::string verdict = labeled(in, "verdict", 2)[1];
    if (verdict != "infringing" && verdict != "clean") {
        throw std::runtime_error("instance report: bad verdict '" + verdict + "'");
    }
    rep.verdict = verdict == "infringing";
    const size_t count = size_t(parse_u64(labeled(in, "distances", 2)[1]));
    rep.distances.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        std::vector<std::string> w = in.next("distance");
        if (w.size() != 1) throw std::runtime_error("instance report: bad distance line");
        rep.distances.push_back(parse_f32(w[0]));
    }
    in.expect_done();
    return rep;
}

std::string serialize_statistical_report(const StatisticalReport& report) {
    std::string out = "provlab statistical-report 1\n";
    out += "suspect " + report.suspect_digest.hex() + '\n';
    out += "keys " + report.keys_digest.hex() + '\n';
    out += "model_score " + format_f32(report.model_score) + '\n';
    out += "res " + std::to_string(report.res) + '\n';
    out += "image_scores " + std::to_string(report.image_scores.size()) + '\n';
    for (float s : report.image_scores) {
        out += format_f32(s);
        out += '\n';
    }
    return out;
}

StatisticalReport parse_statistical_report(const std::string& text) {
    LineReader in(text);
    expect_header(in, "statistical-report");
    StatisticalReport rep;
    rep.suspect_digest = parse_digest(labeled(in, "suspect", 2)[1]);
    rep.keys_digest = parse_digest(labeled(in, "keys", 2)[1]);
    rep.model_score = parse_f32(labeled(in, "model_score", 2)[1]);
    rep.res = parse_bit(labeled(in, "res", 2)[1]);
    const size_t count = size_t(parse_u64(labeled(in, "image_scores", 2)[1]));
    rep.image_scores.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        std::vector<std::string> w = in.next("image score");
        if (w.size() != 1) {
            throw std::runtime_error("statistical report: bad score line");
        }
        rep.image_scores.push_back(parse_f32(w[0]));
    }
    in.expect_done();
    return rep;
}

std::string serialize_discriminator_text(const Discriminator& d) {
    if (d.w.numel() != kDiscriminatorFeatures) {
        throw std::invalid_argument("discriminator has " + std::to_string(d.w.numel()) +
                                    " weights, expected " +
                                    std::to_string(kDiscriminatorFeatures));
    }
    std::string out = "provlab discriminator 1\n";
    out += "keys " + d.keys_digest.hex() + '\n';
    out += "seed " + std::to_string(d.seed) + '\n';
    out += "bias " + format_f32(d.b) + '\n';
    out += "weights " + std::to_string(d.w.numel()) + '\n';
    for (size_t i = 0; i < d.w.numel(); ++i) {
        out += format_f32(d.w.at(i));
        out += '\n';
    }
    return out;
}

Discriminator parse_discriminator_text(const std::string& text) {
    LineReader in(text);
    expect_header(in, "discriminator");
    Discriminator d;
    d.keys_digest = parse_digest(labeled(in, "keys", 2)[1]);
    d.seed = parse_u64(labeled(in, "seed", 2)[1]);
    d.b = parse_f32(labeled(in, "bias", 2)[1]);
    const size_t count = size_t(parse_u64(labeled(in, "weights", 2)[1]));
    if (count != kDiscriminatorFeatures) {
        throw std::runtime_error("discriminator: expected " +
                                 std::to_string(kDiscriminatorFeatures) + " weights, got " +
                                 std::to_string(count));
    }
    d.w = Tensor({count});
    for (size_t i = 0; i < count; ++i) {
        std::vector<std::string> w = in.next("weight");
        if (w.size() != 1) throw std::runtime_error("discriminator: bad weight line");
        d.w.at(i) = parse_f32(w[0]);
    }
    in.expect_done();
    return d;
}

}  // namespace provlab
