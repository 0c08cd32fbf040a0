#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace crest {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    return mix64(mix64(base) ^ (tag * 0xd1b54a32d192ed03ULL));
}

/// FNV-1a, stable across platforms (std::hash is not).
inline std::uint64_t hash_text(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose) {
    return derive_seed(base, hash_text(purpose));
}

// Distribution helpers are written out by hand so streams are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = n;
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return static_cast<std::size_t>(r % bound);
    }

    /// Uniform in [lo, hi] inclusive.
    int range(int lo, int hi) { return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo + 1))); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    Rng split(std::string_view purpose) { return Rng(derive_seed(next(), purpose)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace crest
