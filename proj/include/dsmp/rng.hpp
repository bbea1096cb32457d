#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dsmp {

// Philox4x32-10 counter-based generator. Every Gaussian increment is a pure
// function of (seed, path, step, mode), so ensembles are reproducible under
// any parallel schedule and extending M keeps existing paths unchanged.
namespace philox {

struct Counter {
    uint32_t v[4];
};

inline uint32_t mulhi32(uint32_t a, uint32_t b) {
    return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) >> 32);
}

inline Counter round10(Counter ctr, uint32_t k0, uint32_t k1) {
    constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const uint32_t hi0 = mulhi32(M0, ctr.v[0]);
        const uint32_t lo0 = M0 * ctr.v[0];
        const uint32_t hi1 = mulhi32(M1, ctr.v[2]);
        const uint32_t lo1 = M1 * ctr.v[2];
        Counter out;
        out.v[0] = hi1 ^ ctr.v[1] ^ k0;
        out.v[1] = lo1;
        out.v[2] = hi0 ^ ctr.v[3] ^ k1;
        out.v[3] = lo0;
        ctr = out;
        k0 += W0;
        k1 += W1;
    }
    return ctr;
}

}  // namespace philox

/// Standard normal draw keyed by (seed, path, step, mode).
inline double gaussian_draw(uint64_t seed, uint32_t path, uint32_t step, uint32_t mode) {
    philox::Counter c{{path, step, mode, 0x64736d70u}};
    const philox::Counter r =
        philox::round10(c, static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32));
    // Box-Muller on two uniforms in (0,1]; +1 keeps u1 away from zero.
    const double u1 = (static_cast<double>(r.v[0]) + 1.0) * 0x1p-32;
    const double u2 = static_cast<double>(r.v[1]) * 0x1p-32;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Brownian increments over the solver grid. `substeps > 1` draws at a finer
// resolution and sums, so that a run at dt and a run at dt/2 (with doubled
// substeps vs halved) see the same underlying Brownian path; refinement
// studies rely on this.
struct NoiseEnsemble {
    uint64_t seed = 0;
    int paths = 1;
    int steps = 0;       // K
    int modes = 1;
    double dt = 0.0;
    int substeps = 1;

    double increment(int path, int step, int mode) const {
        const double sub_dt = dt / substeps;
        const double scale = std::sqrt(sub_dt);
        double acc = 0.0;
        for (int j = 0; j < substeps; ++j) {
            acc += scale * gaussian_draw(seed, static_cast<uint32_t>(path),
                                         static_cast<uint32_t>(step * substeps + j),
                                         static_cast<uint32_t>(mode));
        }
        return acc;
    }
};

}  // namespace dsmp
