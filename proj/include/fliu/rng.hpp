#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fliu/error.hpp"

namespace fliu {

// ---------------------------------------------------------------------------
// Seeding discipline.
//
// Every random decision in a run is drawn from a named stream whose seed is
// derived from the master seed plus a sequence of labels, e.g.
//   derive_seed(master, rep, "partition")
//   derive_seed(master, rep, "client", k)
// Two streams with different labels are independent for all practical
// purposes; the same labels always yield the same stream, on every platform.
//
// std::mt19937_64 is fully specified by the standard, but the <random>
// distributions are not, so Rng implements its own uniform / normal / gamma
// transforms on top of the raw engine output.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace detail {

inline uint64_t absorb_bytes(uint64_t h, const void* data, size_t len) {
    // FNV-1a over the bytes, then a splitmix finalizer per field.
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return splitmix64(h);
}

template <typename T>
    requires std::is_integral_v<T>
uint64_t absorb(uint64_t h, T v) {
    const auto u = static_cast<uint64_t>(static_cast<int64_t>(v));
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(u >> (8 * i));
    return absorb_bytes(h, bytes, 8);
}

inline uint64_t absorb(uint64_t h, std::string_view s) {
    h = absorb(h, static_cast<uint64_t>(s.size()));
    return absorb_bytes(h, s.data(), s.size());
}

inline uint64_t absorb(uint64_t h, const char* s) { return absorb(h, std::string_view(s)); }
inline uint64_t absorb(uint64_t h, const std::string& s) { return absorb(h, std::string_view(s)); }

} // namespace detail

// Collision-resistant stream seed from a master seed and a label tuple.
template <typename... Labels>
uint64_t derive_seed(uint64_t master_seed, const Labels&... labels) {
    uint64_t h = splitmix64(master_seed ^ 0x464c49552d524e47ULL); // "FLIU-RNG"
    ((h = detail::absorb(h, labels)), ...);
    return h;
}

// Deterministic random stream with platform-independent samplers.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1), 53 bits of precision.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n), unbiased via rejection.
    uint64_t uniform_below(uint64_t n) {
        if (n == 0) throw InvalidArgumentError("uniform_below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Marsaglia's polar method (spare value cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Gamma(shape, 1) via Marsaglia-Tsang, with the alpha<1 boost.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw InvalidArgumentError("gamma: shape must be positive");
        if (shape < 1.0) {
            const double u = uniform_positive();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_positive();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v;
            }
        }
    }

    // Fisher-Yates in-place shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Random permutation of 0..n-1.
    std::vector<uint32_t> permutation(size_t n) {
        std::vector<uint32_t> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = static_cast<uint32_t>(i);
        shuffle(p);
        return p;
    }

private:
    double uniform_positive() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace fliu
