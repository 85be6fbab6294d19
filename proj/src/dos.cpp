#include "pltrap/dos.hpp"

#include "pltrap/emptiness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pltrap/csv.hpp"
#include "pltrap/parallel.hpp"

namespace pltrap {

namespace {

GridOperator assemble_dos(const Region* traps, const PotentialSpec& spec, double N,
                          const DosOptions& opts) {
    int d = spec.d;
    Box domain_box = Box::cube(d, Pt{0, 0, 0}, 2.0 * N);
    Region domain = Region::box_union(d, {domain_box});
    double h = opts.grid_h > 0 ? opts.grid_h : 2.0 * N / 64.0;
    double height = spec.height;
    bool hard = spec.hard();
    return assemble(
        domain,
        [&](const Pt& x) {
            if (!traps || traps->parts().empty() || !traps->contains(x)) return 0.0;
            return hard ? kRemoveCell : height;
        },
        h);
}

} // namespace

std::vector<EigPair> finite_volume_spectrum(const PointConfiguration& config,
                                            const PotentialSpec& spec, double N, int k,
                                            const DosOptions& opts) {
    PotentialSpec local = spec;
    local.t_side = 2.0 * N;
    Region traps = build_potential(config, local);
    GridOperator op = assemble_dos(&traps, local, N, opts);
    if (k >= op.n / 4)
        throw std::invalid_argument("finite_volume_spectrum: k too large for the grid");
    return lowest_eigenvalues(op, k, opts.eig);
}

DosHistogram ids_estimate(const DisplacementLaw& law, const PotentialSpec& spec, double N,
                          const std::vector<double>& lambda_grid, int64_t replicas, uint64_t seed,
                          const DosOptions& opts) {
    if (replicas < 1) throw std::invalid_argument("ids_estimate: replicas >= 1 required");
    std::vector<double> grid(lambda_grid);
    std::sort(grid.begin(), grid.end());
    double lam_max = grid.back();
    double vol = std::pow(2.0 * N, spec.d);

    PotentialSpec local = spec;
    local.t_side = 2.0 * N;
    Box sample_win = Box::cube(spec.d, Pt{0, 0, 0}, 2.0 * N + 2.0 * (spec.L + 1.0));
    double trunc = default_truncation_radius(law);

    std::vector<std::vector<double>> counts(static_cast<size_t>(replicas));
    std::vector<uint8_t> trunc_flags(static_cast<size_t>(replicas), 0);
    parallel_for(replicas, opts.threads, [&](int64_t rep) {
        Box restrict = sample_win;
        PointConfiguration cfg = law.kind == LawKind::poisson
            ? sample_configuration(law, sample_win, trunc, seed, uint64_t(rep))
            : sample_configuration(law, sample_win, trunc, seed, uint64_t(rep), &restrict);
        Region traps = build_potential(cfg, local);
        GridOperator op = assemble_dos(&traps, local, N, opts);
        auto pairs = lowest_eigenvalues(op, opts.k, opts.eig);
        if (!pairs.empty() && pairs.back().lambda < lam_max) trunc_flags[size_t(rep)] = 1;
        std::vector<double> cnt(grid.size(), 0.0);
        for (size_t g = 0; g < grid.size(); ++g) {
            int64_t c = 0;
            for (const auto& pr : pairs)
                if (pr.lambda <= grid[g]) ++c;
            cnt[g] = double(c) / vol;
        }
        counts[size_t(rep)] = std::move(cnt);
    });

    DosHistogram hist;
    hist.N = N;
    hist.replicas = replicas;
    hist.lambda = grid;
    hist.law = law;
    hist.ids_mean.assign(grid.size(), 0.0);
    hist.ids_stderr.assign(grid.size(), 0.0);
    for (size_t g = 0; g < grid.size(); ++g) {
        double m = 0.0;
        for (int64_t rp = 0; rp < replicas; ++rp) m += counts[size_t(rp)][g];
        m /= double(replicas);
        double ss = 0.0;
        for (int64_t rp = 0; rp < replicas; ++rp) {
            double dlt = counts[size_t(rp)][g] - m;
            ss += dlt * dlt;
        }
        hist.ids_mean[g] = m;
        hist.ids_stderr[g] = replicas > 1 ? std::sqrt(ss / double(replicas - 1) / double(replicas)) : 0.0;
    }
    for (uint8_t f : trunc_flags) hist.truncated |= (f != 0);
    return hist;
}

DosHistogram ids_free(const PotentialSpec& spec, double N, const std::vector<double>& lambda_grid,
                      const DosOptions& opts) {
    std::vector<double> grid(lambda_grid);
    std::sort(grid.begin(), grid.end());
    GridOperator op = assemble_dos(nullptr, spec, N, opts);
    auto pairs = lowest_eigenvalues(op, opts.k, opts.eig);
    double vol = std::pow(2.0 * N, spec.d);
    DosHistogram hist;
    hist.N = N;
    hist.replicas = 1;
    hist.lambda = grid;
    hist.ids_mean.assign(grid.size(), 0.0);
    hist.ids_stderr.assign(grid.size(), 0.0);
    hist.truncated = !pairs.empty() && pairs.back().lambda < grid.back();
    for (size_t g = 0; g < grid.size(); ++g) {
        int64_t c = 0;
        for (const auto& pr : pairs)
            if (pr.lambda <= grid[g]) ++c;
        hist.ids_mean[g] = double(c) / vol;
    }
    return hist;
}

LifshitzFit lifshitz_fit(const DosHistogram& hist, int d, double theta) {
    LifshitzFit fit;
    fit.target = (d >= 3) ? 0.5 * double(d) + theta / double(d) : 1.0 + 0.5 * theta;
    // small-lambda bins with nonzero mass and ids < 1 (so -log ids > 0)
    std::vector<std::pair<double, double>> pts;
    for (size_t g = 0; g < hist.lambda.size(); ++g) {
        double v = hist.ids_mean[g];
        if (v > 0.0 && v < 1.0) pts.push_back({hist.lambda[g], v});
    }
    std::sort(pts.begin(), pts.end());
    size_t use = std::max<size_t>(3, pts.size() * 2 / 5);
    if (pts.size() < 3) {
        fit.sufficient = false;
        fit.note = "insufficient statistics: fewer than 3 nonzero small-lambda bins";
        return fit;
    }
    use = std::min(use, pts.size());
    Eigen::MatrixXd X(static_cast<int>(use), 2);
    Eigen::VectorXd y(static_cast<int>(use));
    for (size_t i = 0; i < use; ++i) {
        X(int(i), 0) = 1.0;
        X(int(i), 1) = std::log(1.0 / pts[i].first);
        y(int(i)) = std::log(-std::log(pts[i].second));
    }
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::VectorXd beta = xtx.ldlt().solve(X.transpose() * y);
    Eigen::VectorXd resid = y - X * beta;
    double s2 = resid.squaredNorm() / std::max<size_t>(1, use - 2);
    Eigen::MatrixXd cov = s2 * xtx.inverse();
    fit.sufficient = true;
    fit.slope = beta(1);
    fit.slope_ci = 1.96 * std::sqrt(std::max(0.0, cov(1, 1)));
    fit.bins_used = int64_t(use);
    fit.note = "diagnostic fit; deep-tail statistics are not reachable at desk scale";
    return fit;
}

void write_dos_csv(const DosHistogram& hist, const std::string& path) {
    CsvWriter w(path, "lambda,ids_mean,ids_stderr,N,replicas");
    if (!w.good()) throw std::runtime_error("cannot write " + path);
    for (size_t g = 0; g < hist.lambda.size(); ++g)
        w.row(hist.lambda[g], hist.ids_mean[g], hist.ids_stderr[g], hist.N, hist.replicas);
}

} // namespace pltrap
