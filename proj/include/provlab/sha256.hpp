#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace provlab {

// Content digest used for artifact addressing and provenance links.
struct Digest {
    std::array<uint8_t, 32> bytes{};

    bool operator==(const Digest&) const = default;
    bool is_zero() const;
    std::string hex() const;
    // short prefix for filenames / log lines
    std::string hex8() const { return hex().substr(0, 8); }
    static Digest from_hex(std::string_view hex);
};

class Sha256 {
public:
    Sha256();
    void update(const void* data, size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }
    Digest finish();

private:
    void process_block(const uint8_t* block);

    std::array<uint32_t, 8> h_;
    std::array<uint8_t, 64> buffer_{};
    uint64_t total_len_ = 0;
    size_t buffer_len_ = 0;
};

Digest sha256(const void* data, size_t len);
Digest sha256(std::string_view s);

}  // namespace provlab
