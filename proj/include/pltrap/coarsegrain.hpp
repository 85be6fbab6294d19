#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pltrap/lattice.hpp"

namespace pltrap {

// Dyadic index (i0, i1, ..., ik): base site plus refinement bits. The
// associated box is q + 2^{-k}[0,1]^d with q = i0 + sum_j 2^{-j} i_j.
struct DyadicIndex {
    int d = 2;
    std::array<int64_t, 3> base{0, 0, 0};
    std::vector<std::array<uint8_t, 3>> bits;

    int depth() const { return int(bits.size()); }
    Pt corner() const;
    double side() const;
    Box box() const;
    DyadicIndex truncated(int k) const;
    bool is_prefix_of(const DyadicIndex& other) const;
};

struct CoarseGrainParams {
    int d = 2;
    double theta = 2.0;
    double eta = 0.0;
    double gamma = 0.0;
    double chi = 0.0;
    double r = 0.0;
    int n_gamma = 0;
    int n_eta_gamma = 0;
};

// floor(beta * log2 r); the bracketing 2^{-n-1} < r^{-beta} <= 2^{-n} holds
int n_beta(double beta, double r);

// eta from the quadratic margin, chi at the interval midpoint; all parameter
// inequalities are checked
CoarseGrainParams default_params(int d, double theta, double r);
void validate_params(const CoarseGrainParams& p);

// Definition-style density test for the unit box at q, on an already scaled
// configuration xi^r. Points are bucketed once per call.
bool classify_density_box(const PointConfiguration& scaled_config,
                          const std::array<int64_t, 3>& q, const CoarseGrainParams& p);

struct NonDensityRow {
    int64_t replica = 0;
    double r = 0.0;
    double theta = 0.0;
    int64_t boxes_total = 0;
    int64_t boxes_nondensity = 0;
    int64_t max_component = 0;  // face-adjacency components of non-density boxes
};

// Samples replicas of xi over r*window, scales, classifies every whole unit
// box inside the window.
std::vector<NonDensityRow> nondensity_statistics(const DisplacementLaw& law,
                                                 const CoarseGrainParams& p, const Box& window,
                                                 int64_t replicas, uint64_t seed, int threads = 1);

void write_nondensity_csv(const std::vector<NonDensityRow>& rows, const std::string& path);

struct ComplexityCount {
    double log_bound = 0.0;     // log of r^chi (t/r)^{d r^chi} (2^{r^d})^{r^chi}
    double t_rate = 0.0;        // t * r^{-2}
    double ratio = 0.0;         // log_bound / t_rate
};
ComplexityCount complexity_count(const CoarseGrainParams& p, double t, double r);

// scale points by 1/r (xi -> xi^r)
PointConfiguration scale_configuration(const PointConfiguration& cfg, double r);

} // namespace pltrap
