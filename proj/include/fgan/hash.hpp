#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <string_view>

namespace fgan {

// 64-bit FNV-1a. Used for spec hashes, model hashes and config digests;
// stable across platforms and runs.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), seed);
}

// Incremental variant for hashing heterogeneous fields.
class Hasher {
public:
    Hasher& bytes(const void* data, std::size_t len) {
        state_ = fnv1a64(data, len, state_);
        return *this;
    }
    Hasher& u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        return bytes(buf, 8);
    }
    Hasher& f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        return u64(bits);
    }
    Hasher& str(std::string_view s) {
        u64(s.size());
        return bytes(s.data(), s.size());
    }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = kFnvOffset;
};

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace fgan
