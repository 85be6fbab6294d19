#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pltrap/geometry.hpp"
#include "pltrap/rng.hpp"

namespace pltrap {

enum class LawKind { power_tail, shifted_power, uniform_ball, poisson };

std::string law_kind_name(LawKind k);
LawKind law_kind_from_name(const std::string& s);

// Per-site displacement distribution. theta is ignored by the uniform_ball
// and poisson kinds.
struct DisplacementLaw {
    LawKind kind = LawKind::power_tail;
    double theta = 2.0;
    int d = 2;
};

// N(d,theta) with N * integral of exp(-|x|^theta) = 1
double normalization_constant(int d, double theta);

// Radial structure of a displacement law: density, CDF of |xi|, inversion
// tables, and certified tail sums over lattice shells. Instances are cached
// per (kind, d, theta rounded to 1e-6) and immutable after construction.
class RadialLaw {
public:
    static std::shared_ptr<const RadialLaw> get(const DisplacementLaw& law);

    int dim() const { return law_.d; }
    double theta() const { return law_.theta; }
    LawKind kind() const { return law_.kind; }
    double norm_const() const { return norm_; }

    double weight(double r) const;          // unnormalized radial profile w(r)
    double density_at(double r) const { return norm_ * weight(r); }
    double radial_cdf(double s) const;      // P(|xi| <= s)
    double radial_tail(double s) const;     // P(|xi| > s)
    double inv_radial_cdf(double u) const;  // tabulated spline with direct fallback

    // int_a^inf u^k w(u) du
    double moment_tail(int k, double a) const;
    // int_v^inf s^pow w(max(0, s - c)) ds
    double power_tail_integral(int pow, double v, double c) const;
    // int_v^inf s^{d-1} w(max(0, s - c)) ds
    double profile_tail_integral(double v, double c) const;

    struct Bracket { double lo = 0.0, hi = 0.0; };
    // two-sided bound on sum over q in Z^d with |q - center| >= rho of
    // w(max(0, |q - center| - shift)); valid for any center
    Bracket lattice_tail_sum(double rho, double shift) const;

    // draw a displacement vector using the given rng stream
    Pt sample(Crng& rng) const;

private:
    explicit RadialLaw(const DisplacementLaw& law);
    void build_table();
    DisplacementLaw law_;
    double norm_ = 1.0;
    double total_radial_ = 1.0;  // int_0^inf s^{d-1} w(s) ds
    // monotone cubic table of log r against log(-log(1-u))
    std::vector<double> tab_x_, tab_y_, tab_m_;
    double u_lo_ = 0.0, u_hi_ = 1.0;
    double x_lo_ = 0.0, x_hi_ = 0.0;
    double table_cdf_error_ = 0.0;
};

// A finite realization of the (possibly scaled) perturbed lattice inside a
// window, with full seed provenance.
struct PointConfiguration {
    int d = 2;
    Box window;
    DisplacementLaw law;
    uint64_t seed = 0;
    uint64_t stream = 0;
    double truncation_radius = 0.0;
    double tail_bound = 0.0;
    std::vector<Pt> points;
    std::vector<int64_t> site_index;  // flattened padded-lattice index; -1 for poisson
    std::array<int64_t, 3> site_lo{0, 0, 0}, site_hi{0, 0, 0};  // padded site ranges
};

// Exact minimum distance from any lattice site excluded by the padding to
// the window (the padded site box keeps q with ceil(lo-R) <= q <= floor(hi+R)).
double excluded_site_gap(const Box& window, double trunc_radius);

// Certified bound on the probability mass that truncation discards.
double sampler_tail_bound(const DisplacementLaw& law, const Box& window, double trunc_radius);

// One displaced point per padded lattice site (lattice kinds), or a
// Poisson(|window|) number of uniform points. Deterministic per (seed, stream).
// If restrict_to is non-null, points whose radius cannot reach it are dropped
// (the retained points are bit-identical to the full sample).
PointConfiguration sample_configuration(const DisplacementLaw& law, const Box& window,
                                        double trunc_radius, uint64_t seed, uint64_t stream,
                                        const Box* restrict_to = nullptr);

struct IntensityEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    int64_t replicas = 0;
};
IntensityEstimate mean_intensity(const std::vector<PointConfiguration>& ensemble,
                                 const Box& subwindow);

// CSV "q_index,x0,x1[,x2]" plus JSON sidecar with law/window/seed provenance
void write_configuration_csv(const PointConfiguration& cfg, const std::string& csv_path,
                             const std::string& sidecar_path);
PointConfiguration read_configuration_csv(const std::string& csv_path,
                                          const std::string& sidecar_path);

} // namespace pltrap
