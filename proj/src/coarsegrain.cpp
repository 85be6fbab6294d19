#include "pltrap/coarsegrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "pltrap/csv.hpp"
#include "pltrap/emptiness.hpp"
#include "pltrap/parallel.hpp"

namespace pltrap {

Pt DyadicIndex::corner() const {
    Pt q{double(base[0]), double(base[1]), double(base[2])};
    double f = 0.5;
    for (const auto& b : bits) {
        for (int k = 0; k < d; ++k) q[k] += f * double(b[k]);
        f *= 0.5;
    }
    return q;
}

double DyadicIndex::side() const { return std::ldexp(1.0, -depth()); }

Box DyadicIndex::box() const {
    Pt c = corner();
    double s = side();
    for (int k = 0; k < d; ++k) c[k] += 0.5 * s;
    return Box::cube(d, c, s);
}

DyadicIndex DyadicIndex::truncated(int k) const {
    if (k > depth()) throw std::invalid_argument("DyadicIndex: truncation deeper than index");
    DyadicIndex t;
    t.d = d;
    t.base = base;
    t.bits.assign(bits.begin(), bits.begin() + k);
    return t;
}

bool DyadicIndex::is_prefix_of(const DyadicIndex& other) const {
    if (d != other.d || base != other.base || depth() > other.depth()) return false;
    for (int i = 0; i < depth(); ++i)
        if (bits[size_t(i)] != other.bits[size_t(i)]) return false;
    return true;
}

int n_beta(double beta, double r) {
    if (!(r > 1.0)) throw std::invalid_argument("n_beta: r must exceed 1");
    if (!(beta > 0.0)) throw std::invalid_argument("n_beta: beta must be positive");
    int n = int(std::floor(beta * std::log2(r)));
    return n;
}

namespace {
// left side of the eta constraint minus the right side
double eta_margin(int d, double theta, double eta) {
    double lhs = eta * eta + (0.5 * double(d - 2) + theta / double(d)) * eta;
    double rhs = std::min(theta / double(d), 0.5);
    return lhs - rhs;
}
} // namespace

void validate_params(const CoarseGrainParams& p) {
    if (p.d != 2 && p.d != 3) throw std::invalid_argument("coarse grain: d must be 2 or 3");
    if (!(p.theta > 0)) throw std::invalid_argument("coarse grain: theta must be positive");
    if (!(p.eta > 0 && p.eta < 1)) throw std::invalid_argument("coarse grain: eta must lie in (0,1)");
    if (eta_margin(p.d, p.theta, p.eta) >= 0)
        throw std::invalid_argument("coarse grain: eta violates its smallness constraint");
    double gamma = double(p.d - 2) / double(p.d) + 2.0 * p.eta / double(p.d);
    if (std::fabs(gamma - p.gamma) > 1e-12)
        throw std::invalid_argument("coarse grain: gamma inconsistent with eta");
    double chi_lo = 2.0 * p.eta * p.eta + (double(p.d - 2) + 2.0 * p.theta / double(p.d)) * p.eta;
    double chi_hi = std::min(2.0 * p.theta / double(p.d), 1.0);
    if (!(p.chi > chi_lo && p.chi < chi_hi))
        throw std::invalid_argument("coarse grain: chi outside its admissible interval");
    // the probability and cardinality inequalities
    double prob_lhs = double(p.d) * (1.0 - p.eta * p.gamma) + (1.0 - p.gamma) * p.theta + p.chi;
    double rhs = double(p.d) + 2.0 * p.theta / double(p.d);
    if (!(prob_lhs > rhs)) throw std::invalid_argument("coarse grain: probability exponent fails");
    if (!(double(p.d) + p.chi < rhs)) throw std::invalid_argument("coarse grain: cardinality exponent fails");
}

CoarseGrainParams default_params(int d, double theta, double r) {
    if (d != 2 && d != 3) throw std::invalid_argument("default_params: d must be 2 or 3");
    if (!(theta > 0)) throw std::invalid_argument("default_params: theta must be positive");
    // positive root of the eta constraint by bisection, then halve
    double lo = 0.0, hi = 1.0;
    if (eta_margin(d, theta, hi) < 0) hi = 1.0; // margin(1) >= 0 always here, but guard anyway
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (lo + hi);
        if (eta_margin(d, theta, m) < 0) lo = m; else hi = m;
    }
    CoarseGrainParams p;
    p.d = d;
    p.theta = theta;
    p.eta = 0.5 * lo;
    p.gamma = double(d - 2) / double(d) + 2.0 * p.eta / double(d);
    double chi_lo = 2.0 * p.eta * p.eta + (double(d - 2) + 2.0 * theta / double(d)) * p.eta;
    double chi_hi = std::min(2.0 * theta / double(d), 1.0);
    p.chi = 0.5 * (chi_lo + chi_hi);
    p.r = r;
    if (r > 1.0) {
        p.n_gamma = n_beta(p.gamma, r);
        p.n_eta_gamma = n_beta(p.eta * p.gamma, r);
    }
    validate_params(p);
    return p;
}

bool classify_density_box(const PointConfiguration& cfg, const std::array<int64_t, 3>& q,
                          const CoarseGrainParams& p) {
    int d = p.d;
    Box unit = Box::cube(d, Pt{double(q[0]) + 0.5, double(q[1]) + 0.5,
                               (d == 3) ? double(q[2]) + 0.5 : 0.0},
                         1.0);
    Box padded = unit;
    for (int k = 0; k < d; ++k) padded.sides[k] += 2.0;
    Box win = cfg.window;
    for (int k = 0; k < d; ++k)
        if (padded.lo(k) < win.lo(k) - 1e-9 || padded.hi(k) > win.hi(k) + 1e-9)
            throw std::domain_error("classify_density_box: config window too small");

    int ng = p.n_gamma, ne = p.n_eta_gamma;
    if (ng < ne) throw std::invalid_argument("classify_density_box: n_gamma < n_eta_gamma");
    if (ng > 20) throw std::invalid_argument("classify_density_box: refinement too deep");

    // occupied depth-n_gamma cells: a cell counts when the half-size box at
    // its lower corner contains a point (fine index even in every coordinate)
    int64_t cells = int64_t(1) << ng;  // per axis within the unit box
    std::unordered_set<int64_t> occupied;
    double fine = std::ldexp(1.0, ng + 1);  // 2^{n_gamma+1}
    for (const Pt& x : cfg.points) {
        bool in_unit = true;
        for (int k = 0; k < d; ++k)
            if (x[k] < double(q[k]) || x[k] >= double(q[k]) + 1.0) { in_unit = false; break; }
        if (!in_unit) continue;
        bool even_all = true;
        int64_t cell_flat = 0;
        for (int k = 0; k < d; ++k) {
            double rel = x[k] - double(q[k]);
            int64_t f = int64_t(std::floor(rel * fine));
            f = std::clamp<int64_t>(f, 0, 2 * cells - 1);
            if (f % 2 != 0) { even_all = false; break; }
            cell_flat = cell_flat * cells + f / 2;
        }
        if (even_all) occupied.insert(cell_flat);
    }

    // every depth-n_eta_gamma subcell needs at least half of its depth-n_gamma
    // descendants occupied
    int64_t coarse = int64_t(1) << ne;
    int64_t sub = int64_t(1) << (ng - ne);  // descendants per axis
    int64_t desc_total = 1;
    for (int k = 0; k < d; ++k) desc_total *= sub;
    int64_t need = (desc_total + 1) / 2;  // "at least half", inclusive

    std::array<int64_t, 3> ci{0, 0, 0};
    int64_t ncoarse = 1;
    for (int k = 0; k < d; ++k) ncoarse *= coarse;
    for (int64_t cflat = 0; cflat < ncoarse; ++cflat) {
        int64_t rem = cflat;
        for (int k = d - 1; k >= 0; --k) {
            ci[size_t(k)] = rem % coarse;
            rem /= coarse;
        }
        int64_t count = 0;
        std::array<int64_t, 3> di{0, 0, 0};
        int64_t nsub = desc_total;
        for (int64_t sflat = 0; sflat < nsub; ++sflat) {
            int64_t r2 = sflat;
            for (int k = d - 1; k >= 0; --k) {
                di[size_t(k)] = r2 % sub;
                r2 /= sub;
            }
            int64_t flat = 0;
            for (int k = 0; k < d; ++k) flat = flat * cells + (ci[size_t(k)] * sub + di[size_t(k)]);
            if (occupied.count(flat)) ++count;
        }
        if (count < need) return false;
    }
    return true;
}

PointConfiguration scale_configuration(const PointConfiguration& cfg, double r) {
    if (!(r > 0)) throw std::invalid_argument("scale_configuration: r must be positive");
    PointConfiguration out = cfg;
    double inv = 1.0 / r;
    for (Pt& p : out.points)
        for (int k = 0; k < cfg.d; ++k) p[k] *= inv;
    Box w = cfg.window;
    for (int k = 0; k < cfg.d; ++k) {
        w.center[k] *= inv;
        w.sides[k] *= inv;
    }
    out.window = w;
    return out;
}

std::vector<NonDensityRow> nondensity_statistics(const DisplacementLaw& law,
                                                 const CoarseGrainParams& p, const Box& window,
                                                 int64_t replicas, uint64_t seed, int threads) {
    if (replicas < 1) throw std::invalid_argument("nondensity_statistics: replicas must be >= 1");
    int d = p.d;
    double r = p.r;
    if (!(r > 1.0)) throw std::invalid_argument("nondensity_statistics: params carry no scale r");

    // whole unit boxes inside the window
    std::array<int64_t, 3> qlo{0, 0, 0}, qhi{0, 0, 0};
    for (int k = 0; k < d; ++k) {
        qlo[k] = int64_t(std::ceil(window.lo(k)));
        qhi[k] = int64_t(std::floor(window.hi(k))) - 1;
        if (qhi[k] < qlo[k]) throw std::invalid_argument("nondensity_statistics: window too small");
    }
    std::vector<std::array<int64_t, 3>> boxes;
    int64_t z0 = (d == 3) ? qlo[2] : 0, z1 = (d == 3) ? qhi[2] : 0;
    for (int64_t i = qlo[0]; i <= qhi[0]; ++i)
        for (int64_t j = qlo[1]; j <= qhi[1]; ++j)
            for (int64_t k = z0; k <= z1; ++k) boxes.push_back({i, j, k});

    Box big = window;
    for (int k = 0; k < d; ++k) {
        big.center[k] *= r;
        big.sides[k] = big.sides[k] * r + 2.0 * r;  // pad so scaled window covers q padded by 1
    }
    double trunc = default_truncation_radius(law);

    std::vector<NonDensityRow> rows(static_cast<size_t>(replicas));
    parallel_for(replicas, threads, [&](int64_t rep) {
        PointConfiguration cfg = sample_configuration(law, big, trunc, seed, uint64_t(rep));
        PointConfiguration scaled = scale_configuration(cfg, r);
        std::unordered_set<int64_t> bad;
        for (size_t b = 0; b < boxes.size(); ++b)
            if (!classify_density_box(scaled, boxes[b], p)) bad.insert(int64_t(b));
        // face-adjacency components among non-density boxes
        int64_t maxcomp = 0;
        std::unordered_set<int64_t> seen;
        auto key_of = [&](const std::array<int64_t, 3>& q) {
            return (q[0] * 100000 + q[1]) * 100000 + q[2];
        };
        std::unordered_map<int64_t, int64_t> by_coord;
        for (int64_t b : bad) by_coord[key_of(boxes[size_t(b)])] = b;
        for (int64_t b : bad) {
            if (seen.count(b)) continue;
            int64_t size = 0;
            std::vector<int64_t> stack{b};
            seen.insert(b);
            while (!stack.empty()) {
                int64_t cur = stack.back();
                stack.pop_back();
                ++size;
                auto q = boxes[size_t(cur)];
                for (int k = 0; k < d; ++k)
                    for (int s = -1; s <= 1; s += 2) {
                        auto q2 = q;
                        q2[size_t(k)] += s;
                        auto it = by_coord.find(key_of(q2));
                        if (it != by_coord.end() && !seen.count(it->second)) {
                            seen.insert(it->second);
                            stack.push_back(it->second);
                        }
                    }
            }
            maxcomp = std::max(maxcomp, size);
        }
        rows[size_t(rep)] = NonDensityRow{rep, r, p.theta, int64_t(boxes.size()),
                                          int64_t(bad.size()), maxcomp};
    });
    return rows;
}

void write_nondensity_csv(const std::vector<NonDensityRow>& rows, const std::string& path) {
    CsvWriter w(path, "replica,r,theta,boxes_total,boxes_nondensity,max_component_size");
    if (!w.good()) throw std::runtime_error("cannot write " + path);
    for (const auto& r : rows)
        w.row(r.replica, r.r, r.theta, r.boxes_total, r.boxes_nondensity, r.max_component);
}

ComplexityCount complexity_count(const CoarseGrainParams& p, double t, double r) {
    ComplexityCount c;
    double rchi = std::pow(r, p.chi);
    c.log_bound = p.chi * std::log(r) + double(p.d) * rchi * std::log(t / r) +
                  rchi * std::pow(r, double(p.d)) * std::log(2.0);
    c.t_rate = t / (r * r);
    c.ratio = c.log_bound / c.t_rate;
    return c;
}

} // namespace pltrap
