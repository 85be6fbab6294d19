#include "pltrap/lattice.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pltrap/csv.hpp"
#include "pltrap/gammafn.hpp"

namespace pltrap {

std::string law_kind_name(LawKind k) {
    switch (k) {
        case LawKind::power_tail: return "power_tail";
        case LawKind::shifted_power: return "shifted_power";
        case LawKind::uniform_ball: return "uniform_ball";
        case LawKind::poisson: return "poisson";
    }
    return "?";
}

LawKind law_kind_from_name(const std::string& s) {
    if (s == "power_tail") return LawKind::power_tail;
    if (s == "shifted_power") return LawKind::shifted_power;
    if (s == "uniform_ball") return LawKind::uniform_ball;
    if (s == "poisson") return LawKind::poisson;
    throw std::invalid_argument("unknown law kind: " + s);
}

double normalization_constant(int d, double theta) {
    if (d != 2 && d != 3) throw std::invalid_argument("normalization_constant: d must be 2 or 3");
    if (!(theta > 0)) throw std::invalid_argument("normalization_constant: theta must be positive");
    return theta / (sphere_area(d) * gamma_fn(double(d) / theta));
}

namespace {
double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}
double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
    return r;
}
} // namespace

// ---------------------------------------------------------------- RadialLaw

RadialLaw::RadialLaw(const DisplacementLaw& law) : law_(law) {
    if (law_.d != 2 && law_.d != 3) throw std::invalid_argument("RadialLaw: d must be 2 or 3");
    if (law_.kind == LawKind::poisson)
        throw std::invalid_argument("RadialLaw: poisson kind has no displacement law");
    if ((law_.kind == LawKind::power_tail || law_.kind == LawKind::shifted_power)) {
        if (!(law_.theta > 0)) throw std::invalid_argument("RadialLaw: theta must be positive");
        if (law_.theta < 0.02 || law_.theta > 64.0)
            throw std::invalid_argument("RadialLaw: theta outside supported range [0.02, 64]");
    }
    total_radial_ = moment_tail(law_.d - 1, 0.0);
    norm_ = 1.0 / (sphere_area(law_.d) * total_radial_);
    if (law_.kind != LawKind::uniform_ball) build_table();
}

std::shared_ptr<const RadialLaw> RadialLaw::get(const DisplacementLaw& law) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, long long>, std::shared_ptr<const RadialLaw>> cache;
    long long tkey = llround(law.theta * 1e6);
    std::tuple<int, int, long long> key{int(law.kind), law.d, tkey};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto ptr = std::shared_ptr<const RadialLaw>(new RadialLaw(law));
    cache[key] = ptr;
    return ptr;
}

double RadialLaw::weight(double r) const {
    switch (law_.kind) {
        case LawKind::power_tail: return std::exp(-std::pow(r, law_.theta));
        case LawKind::shifted_power: return std::exp(-std::pow(1.0 + r, law_.theta));
        case LawKind::uniform_ball: return r <= 1.0 ? 1.0 : 0.0;
        default: return 0.0;
    }
}

double RadialLaw::moment_tail(int k, double a) const {
    a = std::max(a, 0.0);
    switch (law_.kind) {
        case LawKind::power_tail: {
            double aa = double(k + 1) / law_.theta;
            return std::exp(lgamma_fn(aa)) * gamma_q(aa, std::pow(a, law_.theta)) / law_.theta;
        }
        case LawKind::shifted_power: {
            double y = 1.0 + a;
            double acc = 0.0;
            for (int m = 0; m <= k; ++m) {
                double aa = double(m + 1) / law_.theta;
                double im = std::exp(lgamma_fn(aa)) * gamma_q(aa, std::pow(y, law_.theta)) / law_.theta;
                double sign = ((k - m) % 2 == 0) ? 1.0 : -1.0;
                acc += sign * binom(k, m) * im;
            }
            return std::max(acc, 0.0);
        }
        case LawKind::uniform_ball:
            if (a >= 1.0) return 0.0;
            return (1.0 - ipow(a, k + 1)) / double(k + 1);
        default:
            return 0.0;
    }
}

double RadialLaw::radial_cdf(double s) const {
    if (s <= 0.0) return 0.0;
    if (law_.kind == LawKind::power_tail)
        return gamma_p(double(law_.d) / law_.theta, std::pow(s, law_.theta));
    if (law_.kind == LawKind::uniform_ball) return s >= 1.0 ? 1.0 : ipow(s, law_.d);
    return 1.0 - moment_tail(law_.d - 1, s) / total_radial_;
}

double RadialLaw::radial_tail(double s) const {
    if (s <= 0.0) return 1.0;
    if (law_.kind == LawKind::power_tail)
        return gamma_q(double(law_.d) / law_.theta, std::pow(s, law_.theta));
    if (law_.kind == LawKind::uniform_ball) return s >= 1.0 ? 0.0 : 1.0 - ipow(s, law_.d);
    return moment_tail(law_.d - 1, s) / total_radial_;
}

namespace {
// bisection inversion of a monotone cdf on [0, inf)
double invert_cdf(const std::function<double(double)>& cdf, double u) {
    double lo = 0.0, hi = 1.0;
    int guard = 0;
    while (cdf(hi) < u && guard++ < 400) { lo = hi; hi *= 2.0; }
    for (int it = 0; it < 120; ++it) {
        double m = 0.5 * (lo + hi);
        if (cdf(m) < u) lo = m; else hi = m;
    }
    return 0.5 * (lo + hi);
}
} // namespace

void RadialLaw::build_table() {
    // Interpolating log r against x = log(-log(1-u)) flattens both ends: the
    // small-u branch has slope 1/d, the tail branch slope 1/theta.
    u_lo_ = 1e-8;
    u_hi_ = 1.0 - 1e-11;
    x_lo_ = std::log(-std::log1p(-u_lo_));
    x_hi_ = std::log(-std::log1p(-u_hi_));
    auto cdf = [this](double s) { return radial_cdf(s); };
    size_t K = 2049;
    for (int attempt = 0; attempt < 4; ++attempt) {
        tab_x_.resize(K);
        tab_y_.resize(K);
        for (size_t i = 0; i < K; ++i) {
            tab_x_[i] = x_lo_ + (x_hi_ - x_lo_) * double(i) / double(K - 1);
            double u = -std::expm1(-std::exp(tab_x_[i]));
            tab_y_[i] = std::log(invert_cdf(cdf, u));
        }
        // Fritsch-Carlson monotone slopes
        tab_m_.assign(K, 0.0);
        std::vector<double> del(K - 1);
        for (size_t i = 0; i + 1 < K; ++i)
            del[i] = (tab_y_[i + 1] - tab_y_[i]) / (tab_x_[i + 1] - tab_x_[i]);
        tab_m_[0] = del[0];
        tab_m_[K - 1] = del[K - 2];
        for (size_t i = 1; i + 1 < K; ++i) {
            if (del[i - 1] * del[i] <= 0) tab_m_[i] = 0.0;
            else {
                tab_m_[i] = 0.5 * (del[i - 1] + del[i]);
                double lim = 3.0 * std::min(del[i - 1], del[i]);
                if (tab_m_[i] > lim) tab_m_[i] = lim;
            }
        }
        // verify the CDF round trip on panel midpoints
        double maxerr = 0.0;
        for (size_t i = 0; i + 1 < K; ++i) {
            double xm = 0.5 * (tab_x_[i] + tab_x_[i + 1]);
            double um = -std::expm1(-std::exp(xm));
            maxerr = std::max(maxerr, std::fabs(radial_cdf(inv_radial_cdf(um)) - um));
        }
        table_cdf_error_ = maxerr;
        if (maxerr < 1e-9) return;
        K = 2 * (K - 1) + 1;
    }
    throw std::runtime_error("RadialLaw: inversion table failed to reach 1e-9 CDF accuracy");
}

double RadialLaw::inv_radial_cdf(double u) const {
    if (law_.kind == LawKind::uniform_ball) return std::pow(u, 1.0 / double(law_.d));
    if (u <= 0.0) return 0.0;
    if (u < u_lo_ || u > u_hi_)
        return invert_cdf([this](double s) { return radial_cdf(s); }, u);
    double x = std::log(-std::log1p(-u));
    size_t lo = 0, hi = tab_x_.size() - 1;
    while (hi - lo > 1) {
        size_t m = (lo + hi) / 2;
        if (tab_x_[m] <= x) lo = m; else hi = m;
    }
    double h = tab_x_[hi] - tab_x_[lo];
    double t = (x - tab_x_[lo]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    double y = h00 * tab_y_[lo] + h10 * h * tab_m_[lo] + h01 * tab_y_[hi] + h11 * h * tab_m_[hi];
    return std::exp(y);
}

double RadialLaw::power_tail_integral(int pow, double v, double c) const {
    v = std::max(v, 0.0);
    double res = 0.0;
    if (c > v) {
        // flat segment: argument of w clamps to zero
        res += weight(0.0) * (ipow(c, pow + 1) - ipow(v, pow + 1)) / double(pow + 1);
        v = c;
    }
    double a = v - c;  // >= 0
    for (int k = 0; k <= pow; ++k)
        res += binom(pow, k) * ipow(c, pow - k) * moment_tail(k, a);
    return std::max(res, 0.0);
}

double RadialLaw::profile_tail_integral(double v, double c) const {
    return power_tail_integral(law_.d - 1, v, c);
}

RadialLaw::Bracket RadialLaw::lattice_tail_sum(double rho, double shift) const {
    double half = 0.5 * std::sqrt(double(law_.d));
    double sd = sphere_area(law_.d);
    Bracket b;
    b.hi = sd * profile_tail_integral(std::max(rho - half, 0.0), shift + half);
    b.lo = sd * profile_tail_integral(rho + half, shift - half);
    if (b.lo > b.hi) std::swap(b.lo, b.hi);
    return b;
}

Pt RadialLaw::sample(Crng& rng) const {
    double r = inv_radial_cdf(rng.uniform());
    Pt out{0, 0, 0};
    if (law_.d == 2) {
        double phi = 2.0 * M_PI * rng.uniform();
        out[0] = r * std::cos(phi);
        out[1] = r * std::sin(phi);
    } else {
        double z = 2.0 * rng.uniform() - 1.0;
        double phi = 2.0 * M_PI * rng.uniform();
        double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        out[0] = r * rho * std::cos(phi);
        out[1] = r * rho * std::sin(phi);
        out[2] = r * z;
    }
    return out;
}

// ---------------------------------------------------------------- sampling

double excluded_site_gap(const Box& window, double trunc_radius) {
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < window.d; ++k) {
        double glo = window.lo(k) - (std::ceil(window.lo(k) - trunc_radius) - 1.0);
        double ghi = (std::floor(window.hi(k) + trunc_radius) + 1.0) - window.hi(k);
        gap = std::min({gap, glo, ghi});
    }
    return gap;
}

double sampler_tail_bound(const DisplacementLaw& law, const Box& window, double trunc_radius) {
    if (law.kind == LawKind::poisson) return 0.0;
    auto rl = RadialLaw::get(law);
    double g = excluded_site_gap(window, trunc_radius);
    if (law.kind == LawKind::uniform_ball) return g >= 1.0 ? 0.0 : 1.0;
    // every excluded site q has d(q, window) >= g; compare the shell sums with
    // the co-area integral of the window neighborhoods, V(s) = prod(L_k + 2s)
    double half = 0.5 * std::sqrt(double(law.d));
    // coefficients of V'(s)
    int d = law.d;
    std::vector<double> L(d);
    for (int k = 0; k < d; ++k) L[k] = window.sides[k];
    double bound = 0.0;
    if (d == 2) {
        // V'(s) = 2(L0 + L1) + 8 s
        bound += 2.0 * (L[0] + L[1]) * rl->power_tail_integral(0, g - half, half);
        bound += 8.0 * rl->power_tail_integral(1, g - half, half);
    } else {
        // V'(s) = 2(L0L1 + L0L2 + L1L2) + 8(L0+L1+L2) s + 24 s^2
        bound += 2.0 * (L[0] * L[1] + L[0] * L[2] + L[1] * L[2]) *
                 rl->power_tail_integral(0, g - half, half);
        bound += 8.0 * (L[0] + L[1] + L[2]) * rl->power_tail_integral(1, g - half, half);
        bound += 24.0 * rl->power_tail_integral(2, g - half, half);
    }
    return rl->norm_const() * window.volume() * bound;
}

PointConfiguration sample_configuration(const DisplacementLaw& law, const Box& window,
                                        double trunc_radius, uint64_t seed, uint64_t stream,
                                        const Box* restrict_to) {
    if (window.d != law.d) throw std::invalid_argument("sample_configuration: dimension mismatch");
    PointConfiguration cfg;
    cfg.d = law.d;
    cfg.window = window;
    cfg.law = law;
    cfg.seed = seed;
    cfg.stream = stream;
    cfg.truncation_radius = trunc_radius;

    if (law.kind == LawKind::poisson) {
        Crng rng(seed, stream, 0x706f6973736f6eULL);
        double vol = window.volume();
        int64_t n = rng.poisson(vol);
        cfg.points.reserve(size_t(n));
        cfg.site_index.assign(size_t(n), -1);
        for (int64_t i = 0; i < n; ++i) {
            Pt p{0, 0, 0};
            for (int k = 0; k < law.d; ++k) p[k] = rng.uniform(window.lo(k), window.hi(k));
            cfg.points.push_back(p);
        }
        return cfg;
    }

    double bound = sampler_tail_bound(law, window, trunc_radius);
    cfg.tail_bound = bound;
    if (!(bound < 1e-9)) {
        std::ostringstream os;
        os << "sample_configuration: truncation too small, tail bound " << bound
           << " exceeds 1e-9 (radius " << trunc_radius << ")";
        throw std::runtime_error(os.str());
    }

    auto rl = RadialLaw::get(law);
    std::array<int64_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < law.d; ++k) {
        lo[k] = int64_t(std::ceil(window.lo(k) - trunc_radius));
        hi[k] = int64_t(std::floor(window.hi(k) + trunc_radius));
    }
    cfg.site_lo = lo;
    cfg.site_hi = hi;
    int64_t n1 = hi[1] - lo[1] + 1;
    int64_t n2 = (law.d == 3) ? hi[2] - lo[2] + 1 : 1;
    int64_t zlo = (law.d == 3) ? lo[2] : 0, zhi = (law.d == 3) ? hi[2] : 0;

    for (int64_t i = lo[0]; i <= hi[0]; ++i)
        for (int64_t j = lo[1]; j <= hi[1]; ++j)
            for (int64_t k = zlo; k <= zhi; ++k) {
                Crng rng(seed, stream, site_key(i, j, k));
                double u = rng.uniform();
                double r = rl->inv_radial_cdf(u);
                Pt q{double(i), double(j), (law.d == 3) ? double(k) : 0.0};
                if (restrict_to && r < restrict_to->dist_outside(q)) continue;
                Pt dir{0, 0, 0};
                if (law.d == 2) {
                    double phi = 2.0 * M_PI * rng.uniform();
                    dir[0] = std::cos(phi);
                    dir[1] = std::sin(phi);
                } else {
                    double z = 2.0 * rng.uniform() - 1.0;
                    double phi = 2.0 * M_PI * rng.uniform();
                    double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
                    dir[0] = rho * std::cos(phi);
                    dir[1] = rho * std::sin(phi);
                    dir[2] = z;
                }
                Pt p{q[0] + r * dir[0], q[1] + r * dir[1], q[2] + r * dir[2]};
                int64_t flat = ((i - lo[0]) * n1 + (j - lo[1])) * n2 + (k - zlo);
                cfg.points.push_back(p);
                cfg.site_index.push_back(flat);
            }
    return cfg;
}

IntensityEstimate mean_intensity(const std::vector<PointConfiguration>& ensemble,
                                 const Box& subwindow) {
    if (ensemble.empty()) throw std::invalid_argument("mean_intensity: empty ensemble");
    if (ensemble.size() < 30)
        throw std::invalid_argument("mean_intensity: need at least 30 replicas");
    double vol = subwindow.volume();
    std::vector<double> dens;
    dens.reserve(ensemble.size());
    for (const auto& cfg : ensemble) {
        int64_t cnt = 0;
        for (const Pt& p : cfg.points)
            if (subwindow.contains(p)) ++cnt;
        dens.push_back(double(cnt) / vol);
    }
    IntensityEstimate est;
    est.replicas = int64_t(dens.size());
    for (double v : dens) est.mean += v;
    est.mean /= double(dens.size());
    double ss = 0.0;
    for (double v : dens) ss += (v - est.mean) * (v - est.mean);
    est.stderr_ = std::sqrt(ss / double(dens.size() - 1) / double(dens.size()));
    return est;
}

// ---------------------------------------------------------------- file IO

void write_configuration_csv(const PointConfiguration& cfg, const std::string& csv_path,
                             const std::string& sidecar_path) {
    CsvWriter w(csv_path, cfg.d == 3 ? "q_index,x0,x1,x2" : "q_index,x0,x1");
    if (!w.good()) throw std::runtime_error("cannot write " + csv_path);
    for (size_t i = 0; i < cfg.points.size(); ++i) {
        std::string line = fmt_int(cfg.site_index[i]) + "," + fmt_double(cfg.points[i][0]) + "," +
                           fmt_double(cfg.points[i][1]);
        if (cfg.d == 3) line += "," + fmt_double(cfg.points[i][2]);
        w.raw_row(line);
    }
    nlohmann::json j;
    j["law"] = {{"kind", law_kind_name(cfg.law.kind)}, {"theta", cfg.law.theta}, {"d", cfg.law.d}};
    j["window"] = {{"center", std::vector<double>(cfg.window.center.begin(), cfg.window.center.begin() + cfg.d)},
                   {"sides", std::vector<double>(cfg.window.sides.begin(), cfg.window.sides.begin() + cfg.d)}};
    j["seed"] = cfg.seed;
    j["stream"] = cfg.stream;
    j["truncation_radius"] = cfg.truncation_radius;
    j["tail_bound"] = cfg.tail_bound;
    j["site_lo"] = std::vector<int64_t>(cfg.site_lo.begin(), cfg.site_lo.begin() + cfg.d);
    j["site_hi"] = std::vector<int64_t>(cfg.site_hi.begin(), cfg.site_hi.begin() + cfg.d);
    std::ofstream side(sidecar_path);
    if (!side) throw std::runtime_error("cannot write " + sidecar_path);
    side << j.dump(2) << "\n";
}

PointConfiguration read_configuration_csv(const std::string& csv_path,
                                          const std::string& sidecar_path) {
    std::ifstream side(sidecar_path);
    if (!side) throw std::runtime_error("cannot read " + sidecar_path);
    nlohmann::json j;
    side >> j;
    PointConfiguration cfg;
    cfg.law.kind = law_kind_from_name(j["law"]["kind"].get<std::string>());
    cfg.law.theta = j["law"]["theta"].get<double>();
    cfg.law.d = j["law"]["d"].get<int>();
    cfg.d = cfg.law.d;
    Pt c{0, 0, 0}, s{0, 0, 0};
    for (int k = 0; k < cfg.d; ++k) {
        c[k] = j["window"]["center"][k].get<double>();
        s[k] = j["window"]["sides"][k].get<double>();
    }
    cfg.window = Box(cfg.d, c, s);
    cfg.seed = j["seed"].get<uint64_t>();
    cfg.stream = j["stream"].get<uint64_t>();
    cfg.truncation_radius = j["truncation_radius"].get<double>();
    cfg.tail_bound = j["tail_bound"].get<double>();
    for (int k = 0; k < cfg.d; ++k) {
        cfg.site_lo[k] = j["site_lo"][k].get<int64_t>();
        cfg.site_hi[k] = j["site_hi"][k].get<int64_t>();
    }

    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot read " + csv_path);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        std::getline(ls, tok, ',');
        cfg.site_index.push_back(std::stoll(tok));
        Pt p{0, 0, 0};
        for (int k = 0; k < cfg.d; ++k) {
            std::getline(ls, tok, ',');
            p[k] = std::stod(tok);
        }
        cfg.points.push_back(p);
    }
    return cfg;
}

} // namespace pltrap
