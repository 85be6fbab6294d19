#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pltrap/lattice.hpp"
#include "pltrap/survival.hpp"

namespace pltrap {

struct DosHistogram {
    double N = 1.0;                  // box half-width
    int64_t replicas = 0;
    std::vector<double> lambda;      // grid of thresholds
    std::vector<double> ids_mean;    // counting function per (2N)^d
    std::vector<double> ids_stderr;
    bool truncated = false;          // true when k eigenvalues did not reach max(lambda)
    DisplacementLaw law;
};

struct DosOptions {
    double grid_h = 0.0;  // 0 = auto (2N/64)
    int k = 16;           // eigenvalues per replica
    EigOptions eig;
    int threads = 1;
};

// lowest k Dirichlet eigenvalues of -1/2 Laplacian + trap potential in
// (-N,N)^d for one configuration
std::vector<EigPair> finite_volume_spectrum(const PointConfiguration& config,
                                            const PotentialSpec& spec, double N, int k,
                                            const DosOptions& opts = {});

// replica-averaged counting function; V = 0 exactly when law.kind == poisson
// with zero replicas is not allowed
DosHistogram ids_estimate(const DisplacementLaw& law, const PotentialSpec& spec, double N,
                          const std::vector<double>& lambda_grid, int64_t replicas, uint64_t seed,
                          const DosOptions& opts = {});

// free counting function on the same grid (no traps), as reference
DosHistogram ids_free(const PotentialSpec& spec, double N, const std::vector<double>& lambda_grid,
                      const DosOptions& opts = {});

struct LifshitzFit {
    bool sufficient = false;
    double slope = 0.0;       // of log(-log ids) vs log(1/lambda)
    double slope_ci = 0.0;
    double target = 0.0;      // d/2 + theta/d (d>=3) or 1 + theta/2 (d=2)
    int64_t bins_used = 0;
    std::string note;
};

LifshitzFit lifshitz_fit(const DosHistogram& hist, int d, double theta);

void write_dos_csv(const DosHistogram& hist, const std::string& path);

} // namespace pltrap
