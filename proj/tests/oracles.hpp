#pragma once

// Test-only oracles, independent of the library code paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pltrap/geometry.hpp"

namespace oracles {

// layer-cake value of the hole functional on a solid cube of side L:
// integral over [0, L/2] of theta s^{theta-1} (L-2s)^d ds, by fine Simpson
inline double cube_functional(double L, double theta, int d, int n = 20001) {
    double a = 0.0, b = L / 2.0;
    auto f = [&](double s) {
        return theta * std::pow(s, theta - 1.0) * std::pow(L - 2.0 * s, d);
    };
    // Simpson; integrand may be singular at 0 for theta<1, start slightly in
    double eps = (theta < 1.0) ? 1e-12 : 0.0;
    a += eps;
    int m = n | 1;
    double h = (b - a) / double(m - 1);
    double acc = f(a) + f(b);
    for (int i = 1; i + 1 < m; ++i) acc += f(a + h * i) * ((i % 2) ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// brute-force distance from x to the boundary of (union of parts) minus holes,
// by dense sampling of candidate boundary points on box faces
inline double brute_distance(const std::vector<pltrap::Box>& parts,
                             const std::vector<pltrap::Box>& holes, const pltrap::Pt& x, int d,
                             int grid = 400) {
    auto in_union = [&](const pltrap::Pt& p) {
        for (const auto& b : parts)
            if (b.contains(p)) return true;
        return false;
    };
    auto in_holes = [&](const pltrap::Pt& p) {
        for (const auto& b : holes)
            if (b.contains(p)) return true;
        return false;
    };
    auto in_region = [&](const pltrap::Pt& p) { return in_union(p) && !in_holes(p); };
    // scan a fine grid over the bounding window; boundary cells are those whose
    // membership differs from a neighbor
    double lo[3] = {1e300, 1e300, 1e300}, hi[3] = {-1e300, -1e300, -1e300};
    for (const auto& b : parts)
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], b.lo(k) - 0.1);
            hi[k] = std::max(hi[k], b.hi(k) + 0.1);
        }
    double best = 1e300;
    double hzs[3];
    int n[3] = {1, 1, 1};
    for (int k = 0; k < d; ++k) {
        n[k] = grid;
        hzs[k] = (hi[k] - lo[k]) / grid;
    }
    auto at = [&](int i, int j, int k) {
        return pltrap::Pt{lo[0] + (i + 0.5) * hzs[0], lo[1] + (j + 0.5) * hzs[1],
                          d == 3 ? lo[2] + (k + 0.5) * hzs[2] : 0.0};
    };
    bool inside_x = in_region(x);
    for (int i = 0; i < n[0]; ++i)
        for (int j = 0; j < n[1]; ++j)
            for (int k = 0; k < n[2]; ++k) {
                pltrap::Pt p = at(i, j, k);
                bool here = in_region(p);
                bool boundary = false;
                if (i + 1 < n[0] && in_region(at(i + 1, j, k)) != here) boundary = true;
                if (j + 1 < n[1] && in_region(at(i, j + 1, k)) != here) boundary = true;
                if (d == 3 && k + 1 < n[2] && in_region(at(i, j, k + 1)) != here) boundary = true;
                if (!boundary) continue;
                double s = 0.0;
                for (int a = 0; a < d; ++a) s += (p[a] - x[a]) * (p[a] - x[a]);
                best = std::min(best, std::sqrt(s));
            }
    (void)inside_x;
    return best;
}

// dense symmetric eigensolver (cyclic Jacobi); for small oracle matrices
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    int n = int(a.size());
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) < 1e-300) continue;
                double phi = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                double c = std::cos(phi), s = std::sin(phi);
                for (int k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = a[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

// Kolmogorov-Smirnov distance between an empirical sample and a cdf
inline double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    double n = double(sample.size());
    double worst = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        double F = cdf(sample[i]);
        worst = std::max(worst, std::fabs(F - double(i) / n));
        worst = std::max(worst, std::fabs(F - double(i + 1) / n));
    }
    return worst;
}

} // namespace oracles
