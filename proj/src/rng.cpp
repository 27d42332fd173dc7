#include "refed/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace refed {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    // FNV-1a over the tag, then splitmix folds of the numeric ids.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : tag) {
        h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    }
    for (std::uint64_t x : {seed, a, b, c}) {
        std::uint64_t s = h ^ x;
        h = splitmix64(s);
    }
    return h;
}

Rng::Rng(std::uint64_t seed) {
    for (auto& word : s_) {
        word = splitmix64(seed);
    }
    // all-zero state is the one invalid xoshiro seed
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
        s_[0] = 0x9e3779b97f4a7c15ULL;
    }
}

static inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("Rng::below: bound must be >= 1");
    }
    std::uint64_t mask = bound - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
        const std::uint64_t r = next_u64() & mask;
        if (r < bound) return r;
    }
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; 1 - uniform() lies in (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) {
        throw std::invalid_argument("Rng::gamma: shape must be > 0");
    }
    if (shape < 1.0) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace refed
