#pragma once

#include <cmath>
#include <cstdint>

namespace mmq {

/// Counter-based splittable generator: output k of stream (seed, path, role)
/// is a fixed mixing function of the key and the counter, so draws are
/// reproducible independently of thread scheduling or evaluation order.
/// The mixer is the SplitMix64 finalizer applied twice with distinct
/// increments, which decorrelates nearby keys.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t path, std::uint64_t role) {
        key_ = mix(mix(seed + 0x9E3779B97F4A7C15ull) ^ mix(path + 0xBF58476D1CE4E5B9ull) ^
                   mix(role + 0x94D049BB133111EBull));
    }

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ull;
        return mix(counter_ ^ key_);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Strictly positive uniform, safe inside logs.
    double next_uniform_pos() {
        const double u = next_uniform();
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double next_exponential() { return -std::log(next_uniform_pos()); }

    /// Standard normal, Box-Muller; pairs are cached.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform_pos();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ull;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mmq
