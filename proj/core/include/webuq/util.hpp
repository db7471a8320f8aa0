#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace webuq {

// FNV-1a, used for content digests where cross-run stability matters.
// std::hash is implementation-defined, so it never feeds anything that
// ends up in a report or a seed.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

std::string to_hex(std::uint64_t v, int digits = 16);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// Formats a double with enough precision to round-trip, trimming
/// trailing zeros. Deterministic across runs.
std::string format_double(double v);

} // namespace webuq
