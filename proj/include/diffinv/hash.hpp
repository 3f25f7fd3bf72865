#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace diffinv {

// 64-bit FNV-1a, used for mesh identity and run-directory input hashes.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void add(double v) { add(std::bit_cast<std::int64_t>(v)); }
    void add(std::int64_t v) { add_bytes(&v, sizeof v); }
    void add(std::string_view s) { add_bytes(s.data(), s.size()); }

    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace diffinv
