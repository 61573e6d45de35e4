#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hypegt/errors.hpp"

namespace hypegt {

// Deterministic splittable RNG. A root generator is seeded once; independent
// substreams are derived by name, so adding a consumer never perturbs the
// draws of existing ones. All transforms are implemented here (splitmix64
// state advance, 53-bit uniforms, Box-Muller normals) so that every platform
// produces bit-identical sequences.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Derive an independent substream from a label.
    Rng stream(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
        for (char ch : name) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ull;
        }
        return Rng(mix(state_ ^ h));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw ContractError("uniform_index: empty range");
        return next_u64() % n;
    }

    // Box-Muller without caching the second deviate, so consumption order is
    // exactly two uniforms per normal.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

}  // namespace hypegt
