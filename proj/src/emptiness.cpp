#include "pltrap/emptiness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "pltrap/csv.hpp"
#include "pltrap/parallel.hpp"
#include "pltrap/quadrature.hpp"

namespace pltrap {

namespace {
const double kInf = std::numeric_limits<double>::infinity();

// integral of the displacement density centered at q over an axis box
double density_box_integral(const RadialLaw& rl, const Box& box, const Pt& q, double rel_tol) {
    int d = rl.dim();
    if (rl.kind() == LawKind::uniform_ball)
        return rl.norm_const() * ball_box_overlap(box, q, 1.0);
    Pt lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < d; ++k) { lo[k] = box.lo(k); hi[k] = box.hi(k); }
    auto f = [&](const Pt& x) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += (x[k] - q[k]) * (x[k] - q[k]);
        return rl.weight(std::sqrt(s));
    };
    return rl.norm_const() * integrate_box(f, lo, hi, d, rel_tol);
}

// P(q + xi in region W): sum over arrangement cells of the parts union minus
// the holes (holes clipped against the union cells).
double region_hit_prob(const RadialLaw& rl, const Region& W, const Pt& q, double rel_tol) {
    double acc = 0.0;
    int d = W.dim();
    // decompose the parts union into disjoint arrangement cells
    std::array<std::vector<double>, 3> cuts;
    for (int k = 0; k < d; ++k) {
        for (const Box& b : W.parts()) {
            cuts[k].push_back(b.lo(k));
            cuts[k].push_back(b.hi(k));
        }
        std::sort(cuts[k].begin(), cuts[k].end());
        cuts[k].erase(std::unique(cuts[k].begin(), cuts[k].end()), cuts[k].end());
    }
    size_t n0 = cuts[0].size() - 1, n1 = cuts[1].size() - 1, n2 = (d == 3) ? cuts[2].size() - 1 : 1;
    for (size_t i = 0; i < n0; ++i)
        for (size_t j = 0; j < n1; ++j)
            for (size_t k = 0; k < n2; ++k) {
                Pt lo{cuts[0][i], cuts[1][j], (d == 3) ? cuts[2][k] : 0.0};
                Pt hi{cuts[0][i + 1], cuts[1][j + 1], (d == 3) ? cuts[2][k + 1] : 0.0};
                Pt mid{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]),
                       (d == 3) ? 0.5 * (lo[2] + hi[2]) : 0.0};
                bool inside = false;
                for (const Box& b : W.parts())
                    if (b.contains(mid)) { inside = true; break; }
                if (!inside) continue;
                Pt c{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), (d == 3) ? 0.5 * (lo[2] + hi[2]) : 0.0};
                Pt sides{hi[0] - lo[0], hi[1] - lo[1], (d == 3) ? hi[2] - lo[2] : 1.0};
                if (d == 2) sides[2] = 1.0;
                Box cell(d, c, sides);
                acc += density_box_integral(rl, cell, q, rel_tol);
                for (const Box& h : W.holes()) {
                    Box clip = h.intersect(cell);
                    if (!clip.empty()) acc -= density_box_integral(rl, clip, q, rel_tol);
                }
            }
    return acc;
}

// stable P(q + xi outside region) for sites inside the region: the escape set
// is the disjoint union of the complement cells of the parts arrangement and
// the holes, so no cancellation occurs
double region_escape_prob(const RadialLaw& rl, const Region& W, const Pt& q, double rel_tol) {
    int d = rl.dim();
    double dnear = W.distance_to_boundary(q);
    // truncation radius: the discarded mass must be negligible against the
    // escape probability scale
    double R = std::max(dnear, 1.0);
    double target = rl.radial_tail(dnear) * 1e-12;
    if (target <= 0) target = 1e-280;
    while (rl.radial_tail(R) > target && R < 1e6) R *= 1.5;

    std::array<std::vector<double>, 3> cuts;
    for (int k = 0; k < d; ++k) {
        for (const Box& b : W.parts()) {
            cuts[k].push_back(b.lo(k));
            cuts[k].push_back(b.hi(k));
        }
        cuts[k].push_back(q[k] - R);
        cuts[k].push_back(q[k] + R);
        std::sort(cuts[k].begin(), cuts[k].end());
        cuts[k].erase(std::unique(cuts[k].begin(), cuts[k].end()), cuts[k].end());
    }
    double total = 0.0;
    size_t n0 = cuts[0].size() - 1, n1 = cuts[1].size() - 1, n2 = (d == 3) ? cuts[2].size() - 1 : 1;
    for (size_t i = 0; i < n0; ++i)
        for (size_t j = 0; j < n1; ++j)
            for (size_t k = 0; k < n2; ++k) {
                Pt lo{cuts[0][i], cuts[1][j], (d == 3) ? cuts[2][k] : 0.0};
                Pt hi{cuts[0][i + 1], cuts[1][j + 1], (d == 3) ? cuts[2][k + 1] : 0.0};
                // clip to the truncation box around q
                bool empty = false;
                for (int a = 0; a < d; ++a) {
                    lo[a] = std::max(lo[a], q[a] - R);
                    hi[a] = std::min(hi[a], q[a] + R);
                    if (hi[a] <= lo[a]) { empty = true; break; }
                }
                if (empty) continue;
                Pt mid{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]),
                       (d == 3) ? 0.5 * (lo[2] + hi[2]) : 0.0};
                bool inside = false;
                for (const Box& b : W.parts())
                    if (b.contains(mid)) { inside = true; break; }
                if (inside) continue;
                Pt c{mid[0], mid[1], mid[2]};
                Pt sides{hi[0] - lo[0], hi[1] - lo[1], (d == 3) ? hi[2] - lo[2] : 1.0};
                if (d == 2) sides[2] = 1.0;
                total += density_box_integral(rl, Box(d, c, sides), q, rel_tol);
            }
    for (const Box& h : W.holes()) total += density_box_integral(rl, h, q, rel_tol);
    return total;
}

} // namespace

double ball_box_overlap(const Box& box, const Pt& center, double radius) {
    int d = box.d;
    double r2 = radius * radius;
    auto chord = [&](double rr2, double lo, double hi) {
        // length of {t in [lo,hi]: t^2 <= rr2}
        if (rr2 <= 0) return 0.0;
        double w = std::sqrt(rr2);
        return std::max(0.0, std::min(hi, w) - std::max(lo, -w));
    };
    if (d == 2) {
        double a = std::max(box.lo(0), center[0] - radius), b = std::min(box.hi(0), center[0] + radius);
        if (b <= a) return 0.0;
        return integrate_1d(
            [&](double x) {
                double rem = r2 - (x - center[0]) * (x - center[0]);
                return chord(rem, box.lo(1) - center[1], box.hi(1) - center[1]);
            },
            a, b, 1e-10);
    }
    double a = std::max(box.lo(0), center[0] - radius), b = std::min(box.hi(0), center[0] + radius);
    if (b <= a) return 0.0;
    return integrate_1d(
        [&](double x) {
            double rem = r2 - (x - center[0]) * (x - center[0]);
            if (rem <= 0) return 0.0;
            double a2 = std::max(box.lo(1), center[1] - std::sqrt(rem));
            double b2 = std::min(box.hi(1), center[1] + std::sqrt(rem));
            if (b2 <= a2) return 0.0;
            return integrate_1d(
                [&](double y) {
                    double rem2 = rem - (y - center[1]) * (y - center[1]);
                    return chord(rem2, box.lo(2) - center[2], box.hi(2) - center[2]);
                },
                a2, b2, 1e-10);
        },
        a, b, 1e-10);
}

double default_truncation_radius(const DisplacementLaw& law, double eps) {
    if (law.kind == LawKind::poisson) return 1.0;
    if (law.kind == LawKind::uniform_ball) return 4.0;
    auto rl = RadialLaw::get(law);
    double r = 1.0;
    while (rl->radial_tail(r) > eps && r < 64.0) r *= 1.25;
    return std::min(r + 2.0, 64.0);
}

EmptinessResult emptiness_log_prob_exact(const DisplacementLaw& law, const Region& W,
                                         double trunc_radius, const EmptinessOptions& opts) {
    if (law.kind == LawKind::poisson)
        throw std::invalid_argument("emptiness_log_prob_exact: lattice-kind law required");
    if (law.d != W.dim()) throw std::invalid_argument("emptiness: dimension mismatch");
    if (W.kind() != Region::Kind::box_union)
        throw std::invalid_argument("emptiness: box-union region required");
    Box win = W.window();
    for (int k = 0; k < W.dim(); ++k)
        if (!std::isfinite(win.sides[k])) throw std::domain_error("emptiness: unbounded region");

    auto rl = RadialLaw::get(law);
    int d = law.d;
    double volW = W.volume();
    EmptinessResult res;
    if (volW <= 0.0) return res;  // empty region: log P = 0

    // near sites
    std::array<int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        lo[k] = int64_t(std::ceil(win.lo(k) - trunc_radius));
        hi[k] = int64_t(std::floor(win.hi(k) + trunc_radius));
    }
    std::vector<std::array<int64_t, 3>> sites;
    int64_t zlo = (d == 3) ? lo[2] : 0, zhi = (d == 3) ? hi[2] : 0;
    for (int64_t i = lo[0]; i <= hi[0]; ++i)
        for (int64_t j = lo[1]; j <= hi[1]; ++j)
            for (int64_t k = zlo; k <= zhi; ++k) sites.push_back({i, j, k});

    std::vector<double> log_terms(sites.size(), 0.0);
    std::vector<double> pvals(sites.size(), 0.0);
    parallel_for(int64_t(sites.size()), opts.threads, [&](int64_t idx) {
        Pt q{double(sites[idx][0]), double(sites[idx][1]), (d == 3) ? double(sites[idx][2]) : 0.0};
        if (W.contains(q)) {
            double s = region_escape_prob(*rl, W, q, opts.quad_rel_tol);
            if (!(s > 0.0)) throw std::runtime_error("emptiness: escape probability underflow");
            s = std::min(s, 1.0);
            pvals[idx] = 1.0 - s;
            log_terms[idx] = std::log(s);
        } else {
            double p = region_hit_prob(*rl, W, q, opts.quad_rel_tol);
            p = std::clamp(p, 0.0, 1.0);
            pvals[idx] = p;
            if (p >= 1.0 - 1e-9)
                throw std::runtime_error("emptiness: p_q numerically 1, quadrature failure");
            log_terms[idx] = std::log1p(-p);
        }
    });

    double near_sum = 0.0;
    for (double v : log_terms) near_sum += v;  // fixed site order

    // far remainder, bracketed analytically
    double crad = win.circumradius();
    double gap = excluded_site_gap(win, trunc_radius);
    double crad_padded = 0.0;
    for (int k = 0; k < d; ++k) {
        double half = 0.5 * win.sides[k] + trunc_radius + 1.0;
        crad_padded += half * half;
    }
    crad_padded = std::sqrt(crad_padded);

    auto up = rl->lattice_tail_sum(gap, crad);
    auto lo_br = rl->lattice_tail_sum(crad_padded, -crad);
    double S_hi = rl->norm_const() * volW * up.hi;
    double S_lo = rl->norm_const() * volW * lo_br.lo;
    double pbar = std::min(0.5, rl->norm_const() * volW * rl->weight(std::max(0.0, gap - crad)));
    double far_lo = -S_hi / (1.0 - pbar);  // most negative
    double far_hi = -S_lo;
    double far_mid = 0.5 * (far_lo + far_hi);

    res.exact_log_prob = near_sum + far_mid;
    res.tail_bound = 0.5 * (far_hi - far_lo);
    if (opts.keep_sites) {
        res.per_site.resize(sites.size());
        for (size_t i = 0; i < sites.size(); ++i)
            res.per_site[i] = SiteContribution{sites[i], pvals[i], log_terms[i]};
    }
    return res;
}

std::vector<Lemma1Row> lemma1_ratio(const DisplacementLaw& law,
                                    const std::vector<std::pair<double, Region>>& family,
                                    double theta, double quad_resolution,
                                    const EmptinessOptions& opts) {
    std::vector<Lemma1Row> rows;
    double prev_density = -kInf;
    bool increasing = true;
    for (const auto& [v, W] : family) {
        Lemma1Row row;
        row.v = v;
        row.functional = hole_functional(W, theta, quad_resolution);
        double trunc = default_truncation_radius(law);
        EmptinessResult er = emptiness_log_prob_exact(law, W, trunc, opts);
        row.exact_log_prob = er.exact_log_prob;
        row.tail_bound = er.tail_bound;
        row.ratio = row.functional > 0 ? er.exact_log_prob / (-row.functional) : 0.0;
        double density = row.functional / W.volume();
        if (density < prev_density) increasing = false;
        prev_density = density;
        row.hypothesis_ok = increasing;
        rows.push_back(row);
    }
    return rows;
}

void write_lemma1_csv(const std::vector<Lemma1Row>& rows, const std::string& path) {
    CsvWriter w(path, "v,exact_log_prob,hole_functional,ratio,tail_bound");
    if (!w.good()) throw std::runtime_error("cannot write " + path);
    for (const auto& r : rows) w.row(r.v, r.exact_log_prob, r.functional, r.ratio, r.tail_bound);
}

double necessary_condition_log_bound(const DisplacementLaw& law, const Region& W) {
    if (law.kind == LawKind::poisson)
        throw std::invalid_argument("necessary_condition_bound: lattice-kind law required");
    auto rl = RadialLaw::get(law);
    Box win = W.window();
    int d = W.dim();
    double acc = 0.0;
    int64_t zlo = (d == 3) ? int64_t(std::ceil(win.lo(2))) : 0;
    int64_t zhi = (d == 3) ? int64_t(std::floor(win.hi(2))) : 0;
    for (int64_t i = int64_t(std::ceil(win.lo(0))); i <= int64_t(std::floor(win.hi(0))); ++i)
        for (int64_t j = int64_t(std::ceil(win.lo(1))); j <= int64_t(std::floor(win.hi(1))); ++j)
            for (int64_t k = zlo; k <= zhi; ++k) {
                Pt q{double(i), double(j), (d == 3) ? double(k) : 0.0};
                if (!W.contains(q)) continue;
                double tail = rl->radial_tail(W.distance_to_boundary(q));
                acc += std::log(std::max(tail, 1e-300));
            }
    return acc;
}

} // namespace pltrap
