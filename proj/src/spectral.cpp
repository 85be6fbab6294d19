#include "pltrap/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pltrap/csv.hpp"
#include "pltrap/rng.hpp"

namespace pltrap {

void GridOperator::apply(const double* x, double* y) const {
    const double off = 0.5 / (h * h);
    const int nb = 2 * d;
    for (int64_t i = 0; i < n; ++i) {
        double acc = diag[i] * x[i];
        const int32_t* row = &nbr[size_t(i) * nb];
        for (int k = 0; k < nb; ++k)
            if (row[k] >= 0) acc -= off * x[row[k]];
        y[i] = acc;
    }
}

Pt GridOperator::cell_center(int64_t raw) const {
    int64_t nz = (d == 3) ? shape[2] : 1;
    int64_t i = raw / (shape[1] * nz);
    int64_t j = (raw / nz) % shape[1];
    int64_t k = raw % nz;
    return Pt{bbox.lo(0) + (double(i) + 0.5) * h, bbox.lo(1) + (double(j) + 0.5) * h,
              (d == 3) ? bbox.lo(2) + (double(k) + 0.5) * h : 0.0};
}

GridOperator assemble(const Region& region, const std::function<double(const Pt&)>& potential,
                      double h) {
    if (!(h > 0)) throw std::invalid_argument("assemble: h must be positive");
    GridOperator op;
    op.d = region.dim();
    op.h = h;
    op.bbox = region.window();
    for (int k = 0; k < op.d; ++k) {
        double cells = op.bbox.sides[k] / h;
        int64_t m = int64_t(std::llround(cells));
        if (std::fabs(cells - double(m)) > 1e-9 * std::max(1.0, cells) || m < 1)
            throw std::invalid_argument("assemble: h must divide the bounding box sides");
        op.shape[k] = m;
    }
    if (op.d == 2) op.shape[2] = 1;
    int64_t nz = op.shape[2];
    int64_t total = op.shape[0] * op.shape[1] * nz;
    op.compact.assign(size_t(total), -1);

    std::vector<double> pot_raw(size_t(total), 0.0);
    int64_t count = 0;
    for (int64_t raw = 0; raw < total; ++raw) {
        Pt c = op.cell_center(raw);
        if (!region.contains(c)) continue;
        double v = potential ? potential(c) : 0.0;
        if (v < 0) throw std::invalid_argument("assemble: potential must be nonnegative");
        if (v >= kRemoveCell || std::isinf(v)) continue;
        pot_raw[size_t(raw)] = v;
        op.compact[size_t(raw)] = int32_t(count++);
    }
    if (count == 0) throw std::domain_error("assemble: empty masked domain");
    op.n = count;
    op.potential.resize(size_t(count));
    op.raw_of.resize(size_t(count));
    op.nbr.assign(size_t(count) * 2 * op.d, -1);
    op.diag.resize(size_t(count));

    const double off = 0.5 / (h * h);
    for (int64_t raw = 0; raw < total; ++raw) {
        int32_t me = op.compact[size_t(raw)];
        if (me < 0) continue;
        op.raw_of[size_t(me)] = raw;
        op.potential[size_t(me)] = pot_raw[size_t(raw)];
        int64_t i = raw / (op.shape[1] * nz), j = (raw / nz) % op.shape[1], k = raw % nz;
        int missing = 0;
        int slot = 0;
        auto visit = [&](int64_t ii, int64_t jj, int64_t kk) {
            int32_t idx = -1;
            if (ii >= 0 && jj >= 0 && kk >= 0 && ii < op.shape[0] && jj < op.shape[1] && kk < nz) {
                int64_t r2 = (ii * op.shape[1] + jj) * nz + kk;
                idx = op.compact[size_t(r2)];
            }
            if (idx < 0) ++missing;
            op.nbr[size_t(me) * 2 * op.d + slot++] = idx;
        };
        visit(i - 1, j, k);
        visit(i + 1, j, k);
        visit(i, j - 1, k);
        visit(i, j + 1, k);
        if (op.d == 3) {
            visit(i, j, k - 1);
            visit(i, j, k + 1);
        }
        op.diag[size_t(me)] = off * double(2 * op.d + missing) + pot_raw[size_t(raw)];
    }
    return op;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Jacobi-preconditioned CG on (A - sigma I) x = b. Returns false on
// breakdown (indefinite shift).
bool cg_solve(const GridOperator& op, double sigma, const std::vector<double>& b,
              std::vector<double>& x, double rel_tol, int max_iter) {
    const int64_t n = op.n;
    const size_t un = static_cast<size_t>(n);
    std::vector<double> r(b), p(un), z(un), ap(un);
    std::fill(x.begin(), x.end(), 0.0);
    std::vector<double> prec(un);
    for (int64_t i = 0; i < n; ++i) {
        double dg = op.diag[size_t(i)] - sigma;
        prec[size_t(i)] = dg > 1e-30 ? 1.0 / dg : 1.0;
    }
    double bnorm = norm2(b);
    if (bnorm == 0.0) return true;
    for (int64_t i = 0; i < n; ++i) z[size_t(i)] = prec[size_t(i)] * r[size_t(i)];
    p = z;
    double rz = dot(r, z);
    for (int it = 0; it < max_iter; ++it) {
        op.apply(p.data(), ap.data());
        if (sigma != 0.0)
            for (int64_t i = 0; i < n; ++i) ap[size_t(i)] -= sigma * p[size_t(i)];
        double pap = dot(p, ap);
        if (!(pap > 0.0)) return false;  // shift not positive definite
        double alpha = rz / pap;
        for (int64_t i = 0; i < n; ++i) {
            x[size_t(i)] += alpha * p[size_t(i)];
            r[size_t(i)] -= alpha * ap[size_t(i)];
        }
        if (norm2(r) <= rel_tol * bnorm) return true;
        for (int64_t i = 0; i < n; ++i) z[size_t(i)] = prec[size_t(i)] * r[size_t(i)];
        double rz_new = dot(r, z);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int64_t i = 0; i < n; ++i) p[size_t(i)] = z[size_t(i)] + beta * p[size_t(i)];
    }
    return true;  // accept best-effort solve; outer iteration is tolerant
}

double rayleigh(const GridOperator& op, const std::vector<double>& x, std::vector<double>& ax) {
    op.apply(x.data(), ax.data());
    return dot(x, ax) / dot(x, x);
}

} // namespace

SpectralResult principal_eigenvalue(const GridOperator& op, const EigOptions& opts) {
    const int64_t n = op.n;
    if (n == 0) throw std::domain_error("principal_eigenvalue: empty operator");
    double scale = *std::max_element(op.diag.begin(), op.diag.end());
    const size_t un = static_cast<size_t>(n);
    std::vector<double> x(un, 1.0 / std::sqrt(double(n)));
    std::vector<double> ax(un), y(un);
    double lambda = rayleigh(op, x, ax);
    double resid = 0.0;
    double sigma = 0.0;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        // residual of the current iterate
        for (int64_t i = 0; i < n; ++i) y[size_t(i)] = ax[size_t(i)] - lambda * x[size_t(i)];
        resid = norm2(y);
        if (resid <= opts.tol * scale) break;

        // shifted inverse step; the shift trails the Rayleigh quotient from below
        double want = (it >= 2) ? std::max(0.0, lambda - std::max(3.0 * resid, 1e-8 * scale)) : 0.0;
        sigma = want;
        bool ok = cg_solve(op, sigma, x, y, opts.cg_tol, opts.cg_max_iter);
        int backoff = 0;
        while (!ok && backoff < 8) {
            sigma = (sigma == 0.0) ? 0.0 : 0.5 * sigma;
            if (backoff > 4) sigma = 0.0;
            ok = cg_solve(op, sigma, x, y, opts.cg_tol, opts.cg_max_iter);
            ++backoff;
        }
        if (!ok) throw std::runtime_error("principal_eigenvalue: CG breakdown");
        double nrm = norm2(y);
        if (!(nrm > 0)) throw std::runtime_error("principal_eigenvalue: null inverse iterate");
        for (int64_t i = 0; i < n; ++i) x[size_t(i)] = y[size_t(i)] / nrm;
        lambda = rayleigh(op, x, ax);
    }
    if (resid > opts.tol * scale) {
        throw std::runtime_error("principal_eigenvalue: no convergence, residual " +
                                 fmt_double(resid) + " of scale " + fmt_double(scale));
    }
    // Perron eigenvector: fix the sign to nonnegative
    double s = 0.0;
    for (double v : x) s += v;
    if (s < 0)
        for (double& v : x) v = -v;
    double nn = norm2(x);
    for (double& v : x) v /= nn;
    SpectralResult res;
    res.lambda1 = lambda;
    res.eigenvector = std::move(x);
    res.residual = resid;
    res.iterations = it;
    return res;
}

std::vector<EigPair> lowest_eigenvalues(const GridOperator& op, int k, const EigOptions& opts) {
    const int64_t n = op.n;
    if (k < 1) throw std::invalid_argument("lowest_eigenvalues: k must be >= 1");
    if (k >= n) throw std::invalid_argument("lowest_eigenvalues: k must be well below the grid size");
    int b = std::min<int64_t>(n, k + std::max(4, k / 2));
    double scale = *std::max_element(op.diag.begin(), op.diag.end());

    // deterministic pseudo-random start block
    const size_t un = static_cast<size_t>(n);
    std::vector<std::vector<double>> X(b, std::vector<double>(un));
    Crng rng(0x9275d1f3u, 0, 42);
    for (int c = 0; c < b; ++c)
        for (int64_t i = 0; i < n; ++i) X[c][size_t(i)] = rng.gaussian();

    auto orthonormalize = [&](std::vector<std::vector<double>>& V) {
        for (int c = 0; c < int(V.size()); ++c) {
            for (int p = 0; p < c; ++p) {
                double pr = dot(V[c], V[p]);
                for (int64_t i = 0; i < n; ++i) V[c][size_t(i)] -= pr * V[p][size_t(i)];
            }
            double nn = norm2(V[c]);
            if (nn < 1e-14) {
                for (int64_t i = 0; i < n; ++i) V[c][size_t(i)] = rng.gaussian();
                double n2 = norm2(V[c]);
                for (int64_t i = 0; i < n; ++i) V[c][size_t(i)] /= n2;
            } else {
                for (int64_t i = 0; i < n; ++i) V[c][size_t(i)] /= nn;
            }
        }
    };
    orthonormalize(X);

    std::vector<EigPair> out;
    std::vector<double> tmp(un), ax(un);
    for (int outer = 0; outer < opts.max_iter; ++outer) {
        // one inverse power step per column
        for (int c = 0; c < b; ++c) {
            if (!cg_solve(op, 0.0, X[c], tmp, opts.cg_tol, opts.cg_max_iter))
                throw std::runtime_error("lowest_eigenvalues: CG breakdown");
            X[c] = tmp;
        }
        orthonormalize(X);
        // Rayleigh-Ritz
        Eigen::MatrixXd M(b, b);
        std::vector<std::vector<double>> AX(b, std::vector<double>(un));
        for (int c = 0; c < b; ++c) op.apply(X[c].data(), AX[c].data());
        for (int c = 0; c < b; ++c)
            for (int c2 = 0; c2 <= c; ++c2) {
                double v = dot(X[c], AX[c2]);
                M(c, c2) = v;
                M(c2, c) = v;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        std::vector<std::vector<double>> Y(b, std::vector<double>(un, 0.0));
        for (int c = 0; c < b; ++c)
            for (int c2 = 0; c2 < b; ++c2) {
                double w = es.eigenvectors()(c2, c);
                for (int64_t i = 0; i < n; ++i) Y[c][size_t(i)] += w * X[c2][size_t(i)];
            }
        X = std::move(Y);
        // residuals of the first k Ritz pairs
        out.clear();
        bool done = true;
        for (int c = 0; c < k; ++c) {
            op.apply(X[c].data(), ax.data());
            double lam = es.eigenvalues()(c);
            for (int64_t i = 0; i < n; ++i) ax[size_t(i)] -= lam * X[c][size_t(i)];
            double r = norm2(ax);
            out.push_back({lam, r});
            if (r > opts.tol * scale) done = false;
        }
        if (done) return out;
    }
    // return best effort with residuals attached
    return out;
}

double critical_spacing(int d, double r) {
    if (d == 2) {
        if (!(r > 1.0)) throw std::invalid_argument("critical_spacing: r must exceed 1 when d=2");
        return 1.0 / std::sqrt(std::log(r));
    }
    if (d == 3) {
        if (!(r > 0.0)) throw std::invalid_argument("critical_spacing: r must be positive");
        return std::pow(r, -1.0 / 3.0);
    }
    throw std::invalid_argument("critical_spacing: d must be 2 or 3");
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    CsvWriter w(path, "r,delta_over_critical,n,h,lambda1,residual,iterations,functional,M_value");
    if (!w.good()) throw std::runtime_error("cannot write " + path);
    for (const auto& r : rows)
        w.row(r.r, r.delta_over_critical, r.n, r.h, r.lambda1, r.residual, r.iterations,
              r.functional, r.m_value);
}

namespace {

double auto_h(double window_side, double hole_side) {
    // finest of: resolve holes (h <= hole_side/2) and a baseline 1/32 of the window
    double target = std::min(hole_side / 2.0, window_side / 32.0);
    int64_t m = int64_t(std::ceil(window_side / target));
    return window_side / double(m);
}

} // namespace

RauchTaylorResult rauch_taylor_sweep(int d, double beta, const std::vector<double>& r_list, int n,
                                     double h_in, const EigOptions& opts) {
    RauchTaylorResult out;
    for (double r : r_list) {
        double dc = critical_spacing(d, r);
        double hole = 1.0 / r;
        for (int regime = 0; regime < 2; ++regime) {
            double delta = dc * std::pow(r, regime == 0 ? -beta : beta);
            double h = h_in > 0 ? h_in : auto_h(2.0 * n, hole);
            if (h > hole / 2.0 + 1e-12)
                throw std::invalid_argument("rauch_taylor_sweep: grid too coarse to resolve holes; need h <= " +
                                            fmt_double(hole / 2.0));
            PunchedDomainSpec spec{n, delta, hole, d};
            Region punched = build_punched_region(spec);
            GridOperator op = assemble(punched, nullptr, h);
            SpectralResult sr = principal_eigenvalue(op, opts);
            SweepRow row;
            row.r = r;
            row.delta_over_critical = delta / dc;
            row.n = n;
            row.h = h;
            row.lambda1 = sr.lambda1;
            row.residual = sr.residual;
            row.iterations = sr.iterations;
            (regime == 0 ? out.subcritical : out.supercritical).push_back(row);
        }
    }
    return out;
}

FunctionalValue variational_functional(const Region& R, const Region& U, double r, double theta,
                                       int d, double h_in, const EigOptions& opts) {
    if (R.kind() != Region::Kind::box_union || R.parts().size() != 1 || !R.holes().empty())
        throw std::invalid_argument("variational_functional: R must be a single solid box");
    if (U.kind() != Region::Kind::box_union || !U.holes().empty())
        throw std::invalid_argument("variational_functional: U must be a plain box union");

    double minhole = R.window().sides[0];
    for (const Box& b : U.parts())
        for (int k = 0; k < d; ++k) minhole = std::min(minhole, b.sides[k]);
    double h = h_in > 0 ? h_in : auto_h(R.window().sides[0], U.parts().empty() ? R.window().sides[0] : minhole);

    double rsq = r * r;
    const Region& traps = U;
    GridOperator op = assemble(R, [&](const Pt& x) { return traps.contains(x) ? rsq : 0.0; }, h);
    SpectralResult sr = principal_eigenvalue(op, opts);

    FunctionalValue fv;
    fv.h = h;
    fv.lambda1 = sr.lambda1;
    fv.residual = sr.residual;
    fv.iterations = sr.iterations;
    if (U.parts().empty()) {
        fv.functional = 0.0;
    } else {
        Region W = Region::box_union(d, R.parts(), U.parts());
        double res = std::min(minhole / 2.0, R.window().sides[0] / 64.0);
        fv.functional = hole_functional(W, theta, res);
    }
    double dc = critical_spacing(d, r);
    fv.value = fv.lambda1 + std::pow(dc, -theta) * fv.functional;
    return fv;
}

MrResult mr_optimize(int d, double theta, double r, const std::vector<int>& n_list,
                     const std::vector<double>& multipliers, double h, const EigOptions& opts) {
    MrResult out;
    double dc = critical_spacing(d, r);
    for (int n : n_list) {
        Region R = Region::box_union(d, {Box::cube(d, Pt{0, 0, 0}, 2.0 * n)});
        for (double m : multipliers) {
            PunchedDomainSpec spec{n, m * dc, 1.0 / r, d};
            Region punched = build_punched_region(spec);
            Region U = Region::box_union(d, punched.holes());
            MrLandscapePoint pt;
            pt.n = n;
            pt.multiplier = m;
            pt.fv = variational_functional(R, U, r, theta, d, h, opts);
            out.landscape.push_back(pt);
        }
    }
    for (size_t i = 0; i < out.landscape.size(); ++i)
        if (out.best < 0 || out.landscape[i].fv.value < out.landscape[size_t(out.best)].fv.value)
            out.best = int(i);
    return out;
}

} // namespace pltrap
