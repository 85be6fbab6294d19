#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pltrap/geometry.hpp"
#include "pltrap/lattice.hpp"
#include "pltrap/spectral.hpp"

namespace pltrap {

// Modified potential: height h on C(eps q, L) for detection cells C(eps q, eps)
// holding a point, +infinity outside T = (-t/2, t/2)^d. Defaults eps = h = L = 1.
struct PotentialSpec {
    int d = 2;
    double epsilon = 1.0;
    double L = 1.0;
    double height = 1.0;  // infinity = hard traps
    double t_side = 20.0; // side of T

    Box window() const { return Box::cube(d, Pt{0, 0, 0}, t_side); }
    bool hard() const;
};

// union of C(eps q, L) over detection cells containing a point
Region build_potential(const PointConfiguration& config, const PotentialSpec& spec);

enum class SurvivalMethod { walk_mc, eigen_proxy };

struct SurvivalEstimate {
    double t = 0.0;
    SurvivalMethod method = SurvivalMethod::walk_mc;
    double value = 0.0;      // in [0,1]
    double stderr_ = 0.0;
    double log_value = 0.0;  // always finite when the estimate is positive
    int64_t paths = 0;
    int64_t configs = 0;
    double dt = 0.0;
};

struct McOptions {
    int threads = 1;
};

// Feynman-Kac Monte Carlo in a fixed environment: Euler paths from the
// origin, trapezoidal potential tally (soft) or first-entry absorption (hard),
// exit from T kills.
std::vector<SurvivalEstimate> quenched_survival_mc(const Region& traps, const PotentialSpec& spec,
                                                   const std::vector<double>& t_marks,
                                                   int64_t n_paths, double dt, uint64_t seed,
                                                   const McOptions& opts = {});

struct AnnealedResult {
    std::vector<SurvivalEstimate> estimates;        // per t mark
    std::vector<double> between_config_variance;    // per t mark
    std::vector<double> within_config_variance;     // per t mark
};

AnnealedResult annealed_survival(const DisplacementLaw& law, const PotentialSpec& spec,
                                 const std::vector<double>& t_marks, int64_t n_configs,
                                 int64_t n_paths, double dt, uint64_t seed,
                                 const McOptions& opts = {});

struct ProxyOptions {
    double grid_h = 0.25;
    EigOptions eig;
    int threads = 1;
};

struct ProxyResult {
    std::vector<SurvivalEstimate> estimates;  // per t mark
    std::vector<double> lambdas;              // per config (successful solves)
    int64_t failures = 0;
};

// E_theta average of exp(-lambda_1(U(xi), T) t); one eigensolve per
// configuration serves every t
ProxyResult eigen_proxy_annealed(const DisplacementLaw& law, const PotentialSpec& spec,
                                 const std::vector<double>& t_marks, int64_t n_configs,
                                 uint64_t seed, const ProxyOptions& opts = {});

struct ScalingFit {
    double exponent = 0.0;        // a in log(-log S) = a log t + ...
    double exponent_ci = 0.0;     // 1.96 * standard error
    double log_correction = 0.0;  // b in front of loglog t (d=2 fit only)
    double intercept = 0.0;
    std::vector<double> residuals;
};

// least squares of log(-log S) against log t (+ loglog t when requested)
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& t_logS, int d,
                       bool fit_log_correction);

// Theorem-style exponent: (d^2+2theta)/(d^2+2d+2theta) for d>=3; t-power
// (2+theta)/(4+theta) for d=2
double survival_exponent(int d, double theta);

struct MomentRatioResult {
    std::vector<double> t;
    std::vector<double> ratio;        // log S_{t,q}^{1/q} / log S_{t,p}^{1/p}
    double theoretical_factor = 0.0;  // (p/q)^{2/(d+theta+2)}
    double late_ratio = 0.0;          // mean over the top half of the t grid
};

MomentRatioResult moment_ratio(const DisplacementLaw& law, const PotentialSpec& spec,
                               const std::vector<double>& t_grid, double p, double q,
                               int64_t n_configs, uint64_t seed, const ProxyOptions& opts = {});

void write_survival_csv(const std::vector<SurvivalEstimate>& rows, const std::string& path);
std::vector<SurvivalEstimate> read_survival_csv(const std::string& path);
std::string scaling_fit_json(const ScalingFit& fit);

} // namespace pltrap
