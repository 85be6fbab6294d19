#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pltrap/geometry.hpp"

namespace pltrap {

// Discretized -1/2 Laplacian + potential with Dirichlet boundary, cell
// centered; Dirichlet faces are imposed through ghost = -u, which keeps the
// stencil second order at box faces.
struct GridOperator {
    int d = 2;
    double h = 0.0;
    Box bbox;
    std::array<int64_t, 3> shape{1, 1, 1};
    std::vector<int32_t> compact;    // raw cell -> active index, -1 removed
    std::vector<double> potential;   // per active cell
    std::vector<double> diag;        // assembled diagonal
    std::vector<int32_t> nbr;        // 2d neighbor indices per active cell, -1 Dirichlet
    std::vector<int64_t> raw_of;     // active index -> raw cell
    int64_t n = 0;

    void apply(const double* x, double* y) const;
    Pt cell_center(int64_t raw) const;
};

constexpr double kRemoveCell = 1e300;  // potential at/above this removes the cell

GridOperator assemble(const Region& region, const std::function<double(const Pt&)>& potential,
                      double h);

struct SpectralResult {
    double lambda1 = 0.0;
    std::vector<double> eigenvector;  // nonnegative, L2-normalized (cell values)
    double residual = 0.0;
    int iterations = 0;
};

struct EigOptions {
    double tol = 1e-8;        // residual relative to the diagonal scale
    int max_iter = 200;
    double cg_tol = 1e-10;
    int cg_max_iter = 20000;
};

SpectralResult principal_eigenvalue(const GridOperator& op, const EigOptions& opts = {});

struct EigPair {
    double lambda = 0.0;
    double residual = 0.0;
};

// lowest k eigenvalues by blocked shift-invert subspace iteration with
// Rayleigh-Ritz extraction and locking
std::vector<EigPair> lowest_eigenvalues(const GridOperator& op, int k, const EigOptions& opts = {});

double critical_spacing(int d, double r);

struct SweepRow {
    double r = 0.0;
    double delta_over_critical = 0.0;
    int n = 1;
    double h = 0.0;
    double lambda1 = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double functional = 0.0;
    double m_value = 0.0;
};

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Hard-hole punched domains at spacing delta_c(r) * r^{-beta} (subcritical)
// and delta_c(r) * r^{+beta} (supercritical). h <= hole_side/2 enforced.
struct RauchTaylorResult {
    std::vector<SweepRow> subcritical, supercritical;
};
RauchTaylorResult rauch_taylor_sweep(int d, double beta, const std::vector<double>& r_list,
                                     int n = 1, double h = 0.0, const EigOptions& opts = {});

// lambda_1^r(U, R) + delta_c(r)^{-theta} * hole_functional(R \ U, theta)
struct FunctionalValue {
    double lambda1 = 0.0;
    double functional = 0.0;  // hole functional of R \ U
    double value = 0.0;
    double residual = 0.0;
    int iterations = 0;
    double h = 0.0;
};
FunctionalValue variational_functional(const Region& R, const Region& U, double r, double theta,
                                       int d, double h = 0.0, const EigOptions& opts = {});

struct MrLandscapePoint {
    int n = 1;
    double multiplier = 1.0;
    FunctionalValue fv;
};
struct MrResult {
    std::vector<MrLandscapePoint> landscape;
    int best = -1;  // index into landscape
};
MrResult mr_optimize(int d, double theta, double r, const std::vector<int>& n_list,
                     const std::vector<double>& multipliers, double h = 0.0,
                     const EigOptions& opts = {});

} // namespace pltrap
