#pragma once

#include <cstdint>
#include <cmath>

namespace pltrap {

// SplitMix64 finalizer; used both as a generator step and to fold keys.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based generator. The state is derived from (master seed, stream id)
// and an optional per-item key (lattice site, path index, replica). Draws are
// sequential within one Crng instance; instances with distinct keys are
// independent, which makes parallel sampling order-free.
class Crng {
public:
    Crng(uint64_t seed, uint64_t stream, uint64_t key = 0) {
        state_ = splitmix64(seed ^ 0x8f1bbcdcbfa53e0bULL);
        state_ = splitmix64(state_ ^ stream);
        state_ = splitmix64(state_ ^ key);
        have_gauss_ = false;
    }

    uint64_t next_u64() { return splitmix64(state_ += 0x9e3779b97f4a7c15ULL); }

    // uniform in (0,1); never returns 0 or 1
    double uniform() {
        const double inv53 = 1.0 / 9007199254740992.0;
        double u = double(next_u64() >> 11) * inv53;
        if (u <= 0.0) u = inv53;
        if (u >= 1.0) u = 1.0 - inv53;
        return u;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal, Box-Muller with cached second value
    double gaussian() {
        if (have_gauss_) { have_gauss_ = false; return cached_; }
        double u1 = uniform(), u2 = uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        cached_ = rad * std::sin(ang);
        have_gauss_ = true;
        return rad * std::cos(ang);
    }

    // Poisson by inversion; deterministic, O(mean)
    int64_t poisson(double mean) {
        double L = std::exp(-mean);
        if (L > 0.0) {
            int64_t k = 0;
            double p = uniform();
            double cum = L, term = L;
            while (p > cum) {
                ++k;
                term *= mean / double(k);
                cum += term;
                if (k > 64 + int64_t(mean * 8)) break;
            }
            return k;
        }
        // large mean: sum of smaller Poissons
        int64_t parts = int64_t(mean / 256.0) + 1;
        int64_t total = 0;
        for (int64_t i = 0; i < parts; ++i) total += poisson(mean / double(parts));
        return total;
    }

private:
    uint64_t state_;
    bool have_gauss_;
    double cached_ = 0.0;
};

// Key for a lattice site: fold signed coordinates
inline uint64_t site_key(int64_t a, int64_t b, int64_t c = 0) {
    uint64_t h = splitmix64(uint64_t(a) ^ 0x2545f4914f6cdd1dULL);
    h = splitmix64(h ^ uint64_t(b));
    h = splitmix64(h ^ uint64_t(c));
    return h;
}

} // namespace pltrap
