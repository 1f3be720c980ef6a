#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <string_view>

#include "hinf/types.hpp"

namespace hinf {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243F6A8885A308D3ULL;
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

/// FNV-1a, so string keys (method names) can feed derive_seed.
constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    std::uint64_t next() { return engine_(); }

    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    /// Complex normal with independent N(0, sigma^2) real and imaginary parts.
    Complex complex_normal(double sigma) { return {sigma * normal(), sigma * normal()}; }

    RVec normal_vector(Index n) {
        RVec v(n);
        for (Index i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    /// Uniform on the unit sphere of C^n (or R^n in real mode).
    CVec unit_sphere(Index n, Field field) {
        CVec v(n);
        for (Index i = 0; i < n; ++i)
            v(i) = field == Field::real ? Complex(normal(), 0.0) : Complex(normal(), normal());
        double nrm = v.norm();
        if (nrm == 0.0) {
            v.setZero();
            v(0) = 1.0;
            return v;
        }
        return v / nrm;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace hinf
