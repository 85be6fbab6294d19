#include "pltrap/survival.hpp"

#include "pltrap/emptiness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pltrap/csv.hpp"
#include "pltrap/parallel.hpp"
#include "pltrap/rng.hpp"

namespace pltrap {

bool PotentialSpec::hard() const { return std::isinf(height); }

Region build_potential(const PointConfiguration& config, const PotentialSpec& spec) {
    if (config.d != spec.d) throw std::invalid_argument("build_potential: dimension mismatch");
    Box T = spec.window();
    // config window must cover T padded by L
    for (int k = 0; k < spec.d; ++k)
        if (config.window.lo(k) > T.lo(k) - spec.L - 1e-9 + 1e-12 ||
            config.window.hi(k) < T.hi(k) + spec.L + 1e-9 - 1e-12)
            throw std::domain_error("build_potential: config window too small for T padded by L");

    double eps = spec.epsilon;
    // detection cells whose trap box can intersect T
    double reach = 0.5 * (spec.L + eps);
    std::set<std::array<int64_t, 3>> occupied;
    for (const Pt& p : config.points) {
        std::array<int64_t, 3> q{0, 0, 0};
        bool relevant = true;
        for (int k = 0; k < spec.d; ++k) {
            q[size_t(k)] = int64_t(std::floor(p[k] / eps + 0.5));
            double center = eps * double(q[size_t(k)]);
            if (center + reach < T.lo(k) || center - reach > T.hi(k)) relevant = false;
        }
        if (relevant) occupied.insert(q);
    }
    std::vector<Box> parts;
    parts.reserve(occupied.size());
    for (const auto& q : occupied) {
        Pt c{eps * double(q[0]), eps * double(q[1]), (spec.d == 3) ? eps * double(q[2]) : 0.0};
        parts.push_back(Box::cube(spec.d, c, spec.L));
    }
    return Region::box_union(spec.d, std::move(parts));
}

namespace {

struct TrapQuery {
    const Region* region = nullptr;
    bool contains(const Pt& x) const {
        return !region->parts().empty() && region->contains(x);
    }
};

TrapQuery make_query(const Region& traps) {
    TrapQuery q;
    q.region = &traps;
    return q;
}

} // namespace

std::vector<SurvivalEstimate> quenched_survival_mc(const Region& traps, const PotentialSpec& spec,
                                                   const std::vector<double>& t_marks,
                                                   int64_t n_paths, double dt, uint64_t seed,
                                                   const McOptions& opts) {
    if (!(dt > 0) || dt > 0.01 + 1e-12)
        throw std::invalid_argument("quenched_survival_mc: need 0 < dt <= 0.01");
    if (n_paths < 1) throw std::invalid_argument("quenched_survival_mc: n_paths >= 1");
    if (t_marks.empty()) throw std::invalid_argument("quenched_survival_mc: no time marks");
    std::vector<double> marks(t_marks);
    std::sort(marks.begin(), marks.end());
    Box T = spec.window();
    bool hard = spec.hard();
    double height = spec.height;
    int d = spec.d;
    TrapQuery trap = make_query(traps);

    std::vector<int64_t> mark_steps(marks.size());
    for (size_t m = 0; m < marks.size(); ++m)
        mark_steps[m] = int64_t(std::llround(marks[m] / dt));
    int64_t total_steps = mark_steps.back();

    // per-path weights at every mark, ordered reduction afterwards
    std::vector<double> weights(size_t(n_paths) * marks.size(), 0.0);
    parallel_for(n_paths, opts.threads, [&](int64_t path) {
        Crng rng(seed, 0x7061746873ULL, uint64_t(path));
        Pt x{0, 0, 0};
        double acc = 0.0;
        bool alive = true;
        double prevV = trap.contains(x) ? height : 0.0;
        if (hard && trap.contains(x)) alive = false;
        double sdt = std::sqrt(dt);
        size_t mark = 0;
        double* wrow = &weights[size_t(path) * marks.size()];
        for (int64_t step = 1; step <= total_steps && mark < marks.size(); ++step) {
            if (alive) {
                for (int k = 0; k < d; ++k) x[k] += sdt * rng.gaussian();
                bool inside = true;
                for (int k = 0; k < d; ++k)
                    if (x[k] <= T.lo(k) || x[k] >= T.hi(k)) { inside = false; break; }
                if (!inside) alive = false;
                else if (hard) {
                    if (trap.contains(x)) alive = false;
                } else {
                    double curV = trap.contains(x) ? height : 0.0;
                    acc += 0.5 * (prevV + curV) * dt;
                    prevV = curV;
                }
            }
            while (mark < marks.size() && step == mark_steps[mark]) {
                wrow[mark] = alive ? (hard ? 1.0 : std::exp(-acc)) : 0.0;
                ++mark;
            }
        }
    });

    std::vector<SurvivalEstimate> out(marks.size());
    for (size_t m = 0; m < marks.size(); ++m) {
        double s = 0.0, s2 = 0.0;
        for (int64_t p = 0; p < n_paths; ++p) {
            double w = weights[size_t(p) * marks.size() + m];
            s += w;
            s2 += w * w;
        }
        double mean = s / double(n_paths);
        double var = std::max(0.0, s2 / double(n_paths) - mean * mean);
        SurvivalEstimate e;
        e.t = marks[m];
        e.method = SurvivalMethod::walk_mc;
        e.value = mean;
        e.stderr_ = std::sqrt(var / double(n_paths));
        e.log_value = mean > 0 ? std::log(mean) : -std::numeric_limits<double>::infinity();
        e.paths = n_paths;
        e.configs = 1;
        e.dt = dt;
        out[m] = e;
    }
    return out;
}

AnnealedResult annealed_survival(const DisplacementLaw& law, const PotentialSpec& spec,
                                 const std::vector<double>& t_marks, int64_t n_configs,
                                 int64_t n_paths, double dt, uint64_t seed,
                                 const McOptions& opts) {
    if (n_configs < 1) throw std::invalid_argument("annealed_survival: n_configs >= 1");
    std::vector<double> marks(t_marks);
    std::sort(marks.begin(), marks.end());
    Box T = spec.window();
    Box sample_win = T;
    for (int k = 0; k < spec.d; ++k) sample_win.sides[k] += 2.0 * (spec.L + 1.0);
    double trunc = default_truncation_radius(law);

    std::vector<std::vector<SurvivalEstimate>> per_config(static_cast<size_t>(n_configs));
    parallel_for(n_configs, opts.threads, [&](int64_t c) {
        Box restrict = sample_win;
        PointConfiguration cfg = law.kind == LawKind::poisson
            ? sample_configuration(law, sample_win, trunc, seed, uint64_t(c) * 2 + 1)
            : sample_configuration(law, sample_win, trunc, seed, uint64_t(c) * 2 + 1, &restrict);
        Region traps = build_potential(cfg, spec);
        McOptions inner;
        inner.threads = 1;
        per_config[size_t(c)] =
            quenched_survival_mc(traps, spec, marks, n_paths, dt, seed ^ (uint64_t(c) << 32), inner);
    });

    AnnealedResult res;
    res.estimates.resize(marks.size());
    res.between_config_variance.assign(marks.size(), 0.0);
    res.within_config_variance.assign(marks.size(), 0.0);
    for (size_t m = 0; m < marks.size(); ++m) {
        double mean = 0.0;
        for (int64_t c = 0; c < n_configs; ++c) mean += per_config[size_t(c)][m].value;
        mean /= double(n_configs);
        double between = 0.0, within = 0.0;
        for (int64_t c = 0; c < n_configs; ++c) {
            double v = per_config[size_t(c)][m].value;
            between += (v - mean) * (v - mean);
            double se = per_config[size_t(c)][m].stderr_;
            within += se * se * double(n_paths);
        }
        between /= std::max<int64_t>(1, n_configs - 1);
        within /= double(n_configs);
        SurvivalEstimate e;
        e.t = marks[m];
        e.method = SurvivalMethod::walk_mc;
        e.value = mean;
        e.stderr_ = std::sqrt((between / double(n_configs)) +
                              within / double(n_configs * n_paths));
        e.log_value = mean > 0 ? std::log(mean) : -std::numeric_limits<double>::infinity();
        e.paths = n_paths;
        e.configs = n_configs;
        e.dt = dt;
        res.estimates[m] = e;
        res.between_config_variance[m] = between;
        res.within_config_variance[m] = within;
    }
    return res;
}

namespace {

double logsumexp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

} // namespace

ProxyResult eigen_proxy_annealed(const DisplacementLaw& law, const PotentialSpec& spec,
                                 const std::vector<double>& t_marks, int64_t n_configs,
                                 uint64_t seed, const ProxyOptions& opts) {
    if (n_configs < 1) throw std::invalid_argument("eigen_proxy_annealed: n_configs >= 1");
    std::vector<double> marks(t_marks);
    std::sort(marks.begin(), marks.end());
    Box T = spec.window();
    Box sample_win = T;
    for (int k = 0; k < spec.d; ++k) sample_win.sides[k] += 2.0 * (spec.L + 1.0);
    double trunc = default_truncation_radius(law);

    std::vector<double> lambdas(size_t(n_configs),
                                std::numeric_limits<double>::quiet_NaN());
    parallel_for(n_configs, opts.threads, [&](int64_t c) {
        Box restrict = sample_win;
        PointConfiguration cfg = law.kind == LawKind::poisson
            ? sample_configuration(law, sample_win, trunc, seed, uint64_t(c) * 2 + 1)
            : sample_configuration(law, sample_win, trunc, seed, uint64_t(c) * 2 + 1, &restrict);
        Region traps = build_potential(cfg, spec);
        TrapQuery trap = make_query(traps);
        Region domain = Region::box_union(spec.d, {T});
        double height = spec.height;
        bool hard = spec.hard();
        try {
            GridOperator op = assemble(
                domain,
                [&](const Pt& x) {
                    if (!trap.contains(x)) return 0.0;
                    return hard ? kRemoveCell : height;
                },
                opts.grid_h);
            SpectralResult sr = principal_eigenvalue(op, opts.eig);
            lambdas[size_t(c)] = sr.lambda1;
        } catch (const std::exception&) {
            // counted below as a failure
        }
    });

    ProxyResult res;
    for (double l : lambdas) {
        if (std::isnan(l)) ++res.failures;
        else res.lambdas.push_back(l);
    }
    if (res.lambdas.empty()) throw std::runtime_error("eigen_proxy_annealed: all eigensolves failed");
    for (double t : marks) {
        std::vector<double> expo;
        expo.reserve(res.lambdas.size());
        for (double l : res.lambdas) expo.push_back(-l * t);
        double logS = logsumexp(expo) - std::log(double(res.lambdas.size()));
        SurvivalEstimate e;
        e.t = t;
        e.method = SurvivalMethod::eigen_proxy;
        e.log_value = logS;
        e.value = std::exp(logS);
        // delta-method spread of the mean in log scale when representable
        double mean = e.value;
        if (mean > 0 && std::isfinite(mean)) {
            double s2 = 0.0;
            for (double l : res.lambdas) {
                double w = std::exp(-l * t);
                s2 += (w - mean) * (w - mean);
            }
            s2 /= std::max<size_t>(1, res.lambdas.size() - 1);
            e.stderr_ = std::sqrt(s2 / double(res.lambdas.size()));
        }
        e.configs = int64_t(res.lambdas.size());
        res.estimates.push_back(e);
    }
    return res;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& t_logS, int d,
                       bool fit_log_correction) {
    if (t_logS.size() < 4) throw std::invalid_argument("scaling_fit: need at least 4 points");
    double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
    for (const auto& [t, ls] : t_logS) {
        if (!(t > 0)) throw std::invalid_argument("scaling_fit: t must be positive");
        if (!(ls < 0)) throw std::invalid_argument("scaling_fit: log S must be negative");
        tmin = std::min(tmin, t);
        tmax = std::max(tmax, t);
    }
    if (tmax < 10.0 * tmin)
        throw std::invalid_argument("scaling_fit: t grid must span at least one decade");
    int cols = fit_log_correction ? 3 : 2;
    int n = int(t_logS.size());
    Eigen::MatrixXd X(n, cols);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        double t = t_logS[size_t(i)].first;
        double ls = t_logS[size_t(i)].second;
        X(i, 0) = 1.0;
        X(i, 1) = std::log(t);
        if (cols == 3) X(i, 2) = std::log(std::max(std::log(t), 1e-9));
        y(i) = std::log(-ls);
    }
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::VectorXd beta = xtx.ldlt().solve(X.transpose() * y);
    Eigen::VectorXd resid = y - X * beta;
    double s2 = resid.squaredNorm() / std::max(1, n - cols);
    Eigen::MatrixXd cov = s2 * xtx.inverse();
    ScalingFit fit;
    fit.intercept = beta(0);
    fit.exponent = beta(1);
    fit.exponent_ci = 1.96 * std::sqrt(std::max(0.0, cov(1, 1)));
    if (cols == 3) fit.log_correction = beta(2);
    fit.residuals.assign(resid.data(), resid.data() + n);
    (void)d;
    return fit;
}

double survival_exponent(int d, double theta) {
    if (d == 2) return (2.0 + theta) / (4.0 + theta);
    return (double(d) * d + 2.0 * theta) / (double(d) * d + 2.0 * d + 2.0 * theta);
}

MomentRatioResult moment_ratio(const DisplacementLaw& law, const PotentialSpec& spec,
                               const std::vector<double>& t_grid, double p, double q,
                               int64_t n_configs, uint64_t seed, const ProxyOptions& opts) {
    if (!(p >= 1.0) || p > q)
        throw std::invalid_argument("moment_ratio: need 1 <= p <= q");
    ProxyResult base = eigen_proxy_annealed(law, spec, t_grid, n_configs, seed, opts);
    MomentRatioResult out;
    out.theoretical_factor = std::pow(p / q, 2.0 / (double(spec.d) + law.theta + 2.0));
    std::vector<double> ts(t_grid);
    std::sort(ts.begin(), ts.end());
    for (double t : ts) {
        std::vector<double> ep, eq;
        for (double l : base.lambdas) {
            ep.push_back(-p * l * t);
            eq.push_back(-q * l * t);
        }
        double logSp = logsumexp(ep) - std::log(double(base.lambdas.size()));
        double logSq = logsumexp(eq) - std::log(double(base.lambdas.size()));
        out.t.push_back(t);
        out.ratio.push_back((logSq / q) / (logSp / p));
    }
    size_t half = out.ratio.size() / 2;
    double acc = 0.0;
    for (size_t i = half; i < out.ratio.size(); ++i) acc += out.ratio[i];
    out.late_ratio = out.ratio.empty() ? 0.0 : acc / double(out.ratio.size() - half);
    return out;
}

void write_survival_csv(const std::vector<SurvivalEstimate>& rows, const std::string& path) {
    CsvWriter w(path, "t,estimate,stderr,method");
    if (!w.good()) throw std::runtime_error("cannot write " + path);
    for (const auto& r : rows)
        w.row(r.t, r.value, r.stderr_, r.method == SurvivalMethod::walk_mc ? "mc" : "proxy");
}

std::vector<SurvivalEstimate> read_survival_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    std::vector<SurvivalEstimate> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tok;
        SurvivalEstimate e;
        std::getline(ls, tok, ',');
        e.t = std::stod(tok);
        std::getline(ls, tok, ',');
        e.value = std::stod(tok);
        std::getline(ls, tok, ',');
        e.stderr_ = std::stod(tok);
        std::getline(ls, tok, ',');
        e.method = tok == "proxy" ? SurvivalMethod::eigen_proxy : SurvivalMethod::walk_mc;
        e.log_value = e.value > 0 ? std::log(e.value) : -std::numeric_limits<double>::infinity();
        out.push_back(e);
    }
    return out;
}

std::string scaling_fit_json(const ScalingFit& fit) {
    nlohmann::json j;
    j["exponent"] = fit.exponent;
    j["exponent_ci"] = fit.exponent_ci;
    j["log_correction"] = fit.log_correction;
    j["intercept"] = fit.intercept;
    j["residuals"] = fit.residuals;
    return j.dump(2);
}

} // namespace pltrap
