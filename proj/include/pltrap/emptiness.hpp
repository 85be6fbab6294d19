#pragma once

#include <string>
#include <vector>

#include "pltrap/geometry.hpp"
#include "pltrap/lattice.hpp"

namespace pltrap {

struct SiteContribution {
    std::array<int64_t, 3> q{0, 0, 0};
    double p = 0.0;         // P(q + xi_q lands in W)
    double log_term = 0.0;  // log(1 - p), evaluated stably
};

struct EmptinessResult {
    double exact_log_prob = 0.0;   // log P(xi(W) = 0), truncated sum + tail midpoint
    double functional = 0.0;       // hole functional of W (filled by the ratio runner)
    double ratio = 0.0;            // exact_log_prob / (-functional)
    double tail_bound = 0.0;       // half-width of the certified far-site bracket
    std::vector<SiteContribution> per_site;  // optional
};

struct EmptinessOptions {
    double quad_rel_tol = 1e-8;
    bool keep_sites = false;
    int threads = 1;
};

// Exact product formula log P(xi(W)=0) = sum_q log(1 - p_q). Sites within
// trunc_radius of the window are evaluated by adaptive quadrature; the far
// remainder is bracketed analytically and its midpoint added.
EmptinessResult emptiness_log_prob_exact(const DisplacementLaw& law, const Region& W,
                                         double trunc_radius,
                                         const EmptinessOptions& opts = {});

// default truncation radius for a target per-site mass
double default_truncation_radius(const DisplacementLaw& law, double eps = 1e-14);

struct Lemma1Row {
    double v = 0.0;
    double exact_log_prob = 0.0;
    double functional = 0.0;
    double ratio = 0.0;
    double tail_bound = 0.0;
    bool hypothesis_ok = true;  // functional/|W| increasing along the family
};

// ratio = exact log emptiness over -hole functional along a region family
std::vector<Lemma1Row> lemma1_ratio(const DisplacementLaw& law,
                                    const std::vector<std::pair<double, Region>>& family,
                                    double theta, double quad_resolution = 0.0,
                                    const EmptinessOptions& opts = {});

void write_lemma1_csv(const std::vector<Lemma1Row>& rows, const std::string& path);

// log of the necessary-condition upper bound: sum over sites q in W of
// log P(|xi_q| > d(q, boundary of W))
double necessary_condition_log_bound(const DisplacementLaw& law, const Region& W);

// volume of the overlap of a box with a Euclidean ball
double ball_box_overlap(const Box& box, const Pt& center, double radius);

} // namespace pltrap
