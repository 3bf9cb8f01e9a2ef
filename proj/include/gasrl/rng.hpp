#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace gasrl {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Counter-based generator: every draw is a pure function of (key, counter), so the
/// whole generator state is two integers and serializes trivially.
///
/// Each draw consumes exactly one counter value, whatever its distribution.
class CounterRng {
public:
    struct State {
        std::uint64_t key = 0;
        std::uint64_t counter = 0;
        bool operator==(const State&) const = default;
    };

    CounterRng() = default;
    explicit CounterRng(std::uint64_t key) : state_{key, 0} {}
    explicit CounterRng(State state) : state_(state) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1].
    double uniform_open_low();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (cosine branch).
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    const State& state() const noexcept { return state_; }
    void set_state(State s) noexcept { state_ = s; }

private:
    std::array<std::uint32_t, 4> next_block();

    State state_{};
};

/// SplitMix64 finalizer; used to derive independent stream keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic child seed from a parent seed, a stream label and an index.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0) noexcept;

}  // namespace gasrl
