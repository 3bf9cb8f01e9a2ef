#include "gasrl/rng.hpp"

#include <cmath>
#include <numbers>

namespace gasrl {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
        mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kPhiloxW0;
        key[1] += kPhiloxW1;
    }
    return ctr;
}

std::array<std::uint32_t, 4> CounterRng::next_block() {
    const std::uint64_t c = state_.counter++;
    return philox4x32({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32), 0u, 0u},
                      {static_cast<std::uint32_t>(state_.key), static_cast<std::uint32_t>(state_.key >> 32)});
}

namespace {

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

double CounterRng::uniform() {
    const auto b = next_block();
    return to_unit(b[0], b[1]);
}

double CounterRng::uniform_open_low() {
    return 1.0 - uniform();
}

double CounterRng::normal() {
    const auto b = next_block();
    const double u1 = 1.0 - to_unit(b[0], b[1]);  // (0, 1]
    const double u2 = to_unit(b[2], b[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    // Lemire-style rejection on 64 bits keeps the draw exactly uniform.
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    for (;;) {
        const auto b = next_block();
        const std::uint64_t x = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        if (x < limit) return x % n;
    }
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) noexcept {
    // FNV-1a over the label, then mix in parent and index.
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return mix64(mix64(parent ^ h) + index);
}

}  // namespace gasrl
