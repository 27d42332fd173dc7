#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace refed {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic stream splitting: every consumer of randomness derives its own
// seed from (run seed, purpose tag, ids). Streams are therefore independent of
// scheduling order and of whether other consumers ran at all.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0);

// xoshiro256++ with self-contained distributions. std:: distributions are
// implementation-defined, which would break byte-level reproducibility of run
// artifacts across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // Unbiased integer in [0, bound); bound >= 1.
    std::uint64_t below(std::uint64_t bound);
    // [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    // Marsaglia-Tsang; shape > 0, unit scale.
    double gamma(double shape);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace refed
