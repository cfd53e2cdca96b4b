#pragma once

#include <cstdint>
#include <random>

namespace ttb {

/// Portable seeded generator.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniforms take the top 53 bits of one draw, normals use the
/// Marsaglia polar method and gammas use Marsaglia-Tsang, so every derived
/// stream is identical across standard libraries (unlike the
/// std::*_distribution adaptors, whose algorithms are unspecified).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform();
    /// Standard normal N(0, 1).
    double normal();
    /// Gamma with the given shape and rate (density rate^a x^(a-1) e^(-rate x) / Gamma(a)).
    double gamma(double shape, double rate);
    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ttb
