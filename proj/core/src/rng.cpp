#include "driftguard/rng.hpp"

namespace driftguard {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return mix64(base ^ mix64(stream));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix64(derive_seed(base, a) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

namespace {

// FNV-1a over the key string, folded into the 64-bit state.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

double keyed_unit_draw(std::uint64_t seed, std::string_view key, std::uint64_t index) {
    const std::uint64_t h = mix64(mix64(seed ^ fnv1a(key)) ^ mix64(index));
    // Top 53 bits give a uniform double in [0, 1).
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace driftguard
