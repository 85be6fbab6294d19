#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "pltrap/gammafn.hpp"
#include "pltrap/lattice.hpp"
#include "pltrap/quadrature.hpp"

using namespace pltrap;

TEST_CASE("lanczos gamma matches the library") {
    for (double x : {0.25, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 40.0, 60.5, 100.0}) {
        CHECK(gamma_fn(x) == doctest::Approx(std::tgamma(x)).epsilon(1e-10));
        CHECK(lgamma_fn(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-10));
    }
}

TEST_CASE("incomplete gamma basics") {
    CHECK(gamma_p(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
    CHECK(gamma_q(0.5, 2.0) == doctest::Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-10));
    for (double a : {0.3, 1.0, 4.0, 20.0}) {
        for (double u : {1e-6, 0.1, 0.5, 0.9, 1.0 - 1e-9}) {
            double x = gamma_p_inv(a, u);
            CHECK(gamma_p(a, x) == doctest::Approx(u).epsilon(1e-9));
        }
    }
}

TEST_CASE("normalization constant closed forms") {
    CHECK(normalization_constant(2, 2.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-10));
    CHECK(normalization_constant(2, 1.0) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-10));
    // d=3, theta=2: radial quadrature oracle of the full-space integral
    double integral = sphere_area(3) *
                      integrate_1d([](double r) { return r * r * std::exp(-r * r); }, 0.0, 12.0,
                                   1e-12);
    CHECK(normalization_constant(3, 2.0) == doctest::Approx(1.0 / integral).epsilon(1e-8));
    CHECK(normalization_constant(3, 2.0) == doctest::Approx(std::pow(M_PI, -1.5)).epsilon(1e-10));
    CHECK_THROWS_AS(normalization_constant(2, -1.0), std::invalid_argument);
}

TEST_CASE("radial inversion closed form at theta = d") {
    DisplacementLaw law{LawKind::power_tail, 2.0, 2};
    auto rl = RadialLaw::get(law);
    double u = 1.0 - std::exp(-1.0);
    CHECK(rl->inv_radial_cdf(u) == doctest::Approx(1.0).epsilon(1e-8));
    for (double uu : {0.05, 0.3, 0.77, 0.999}) {
        double r = rl->inv_radial_cdf(uu);
        CHECK(r == doctest::Approx(std::sqrt(-std::log(1.0 - uu))).epsilon(1e-8));
    }
}

TEST_CASE("radial sampler moments and KS") {
    DisplacementLaw law{LawKind::power_tail, 2.0, 2};
    auto rl = RadialLaw::get(law);
    Crng rng(123, 0, 0);
    int n = 100000;
    double mean = 0.0;
    std::vector<double> radii;
    radii.reserve(10000);
    for (int i = 0; i < n; ++i) {
        Pt v = rl->sample(rng);
        double r = std::sqrt(v[0] * v[0] + v[1] * v[1]);
        mean += r;
        if (i < 10000) radii.push_back(r);
    }
    mean /= n;
    // E|xi| = Gamma(3/2)/Gamma(1) = sqrt(pi)/2; sd of |xi| is about 0.426
    double expect = std::sqrt(M_PI) / 2.0;
    double sd = std::sqrt(1.0 - M_PI / 4.0);
    CHECK(std::fabs(mean - expect) < 3.0 * sd / std::sqrt(double(n)));
    double ks = oracles::ks_distance(radii, [&](double r) { return rl->radial_cdf(r); });
    CHECK(ks < 0.01);
}

TEST_CASE("shifted power law radial structure") {
    DisplacementLaw law{LawKind::shifted_power, 3.0, 2};
    auto rl = RadialLaw::get(law);
    // normalization: N * integral of w over the plane = 1
    double integral = sphere_area(2) *
                      integrate_1d([](double r) { return r * std::exp(-std::pow(1.0 + r, 3.0)); },
                                   0.0, 6.0, 1e-12);
    CHECK(rl->norm_const() == doctest::Approx(1.0 / integral).epsilon(1e-8));
    // cdf inverts
    for (double u : {0.1, 0.5, 0.9}) {
        double r = rl->inv_radial_cdf(u);
        CHECK(rl->radial_cdf(r) == doctest::Approx(u).epsilon(1e-8));
    }
}

TEST_CASE("uniform ball configuration count and determinism") {
    DisplacementLaw law{LawKind::uniform_ball, 0.0, 2};
    Box win = Box::cube(2, Pt{0, 0, 0}, 4.0);
    PointConfiguration a = sample_configuration(law, win, 1.0, 42, 0);
    // padded sites are {-3..3}^2
    CHECK(a.points.size() == 49);
    for (size_t i = 0; i < a.points.size(); ++i) {
        // each point within distance 1 of its site
        int64_t n1 = a.site_hi[1] - a.site_lo[1] + 1;
        int64_t qi = a.site_lo[0] + a.site_index[i] / n1;
        int64_t qj = a.site_lo[1] + a.site_index[i] % n1;
        double dx = a.points[i][0] - double(qi), dy = a.points[i][1] - double(qj);
        CHECK(std::sqrt(dx * dx + dy * dy) <= 1.0 + 1e-12);
    }
    PointConfiguration b = sample_configuration(law, win, 1.0, 42, 0);
    REQUIRE(a.points.size() == b.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i][0] == b.points[i][0]);
        CHECK(a.points[i][1] == b.points[i][1]);
    }
    PointConfiguration c = sample_configuration(law, win, 1.0, 43, 0);
    bool identical = true;
    for (size_t i = 0; i < a.points.size(); ++i)
        if (a.points[i][0] != c.points[i][0]) identical = false;
    CHECK(!identical);
}

TEST_CASE("power tail determinism and site count") {
    DisplacementLaw law{LawKind::power_tail, 2.0, 2};
    Box win = Box::cube(2, Pt{0, 0, 0}, 10.0);
    double trunc = 7.0;
    PointConfiguration a = sample_configuration(law, win, trunc, 9, 3);
    int64_t expect = 1;
    for (int k = 0; k < 2; ++k) expect *= (a.site_hi[k] - a.site_lo[k] + 1);
    CHECK(int64_t(a.points.size()) == expect);
    PointConfiguration b = sample_configuration(law, win, trunc, 9, 3);
    for (size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i][0] == b.points[i][0]);
}

TEST_CASE("truncation certificate refuses small radii") {
    DisplacementLaw law{LawKind::power_tail, 0.5, 2};
    Box win = Box::cube(2, Pt{0, 0, 0}, 10.0);
    CHECK_THROWS_AS(sample_configuration(law, win, 3.0, 1, 0), std::runtime_error);
    CHECK(sampler_tail_bound(law, win, 3.0) > 1e-9);
}

TEST_CASE("restricted sampling matches the full sample inside the target") {
    DisplacementLaw law{LawKind::power_tail, 1.0, 2};
    Box win = Box::cube(2, Pt{0, 0, 0}, 8.0);
    double trunc = 40.0;
    Box target = Box::cube(2, Pt{0, 0, 0}, 8.0);
    PointConfiguration full = sample_configuration(law, win, trunc, 5, 1);
    PointConfiguration lazy = sample_configuration(law, win, trunc, 5, 1, &target);
    // every lazy point appears identically in the full set
    size_t found = 0;
    for (size_t i = 0; i < lazy.points.size(); ++i) {
        for (size_t j = 0; j < full.points.size(); ++j)
            if (full.site_index[j] == lazy.site_index[i]) {
                CHECK(full.points[j][0] == lazy.points[i][0]);
                CHECK(full.points[j][1] == lazy.points[i][1]);
                ++found;
                break;
            }
    }
    CHECK(found == lazy.points.size());
    // and no point of the full sample inside the target is missing
    for (size_t j = 0; j < full.points.size(); ++j) {
        if (target.contains(full.points[j])) {
            bool present = false;
            for (size_t i = 0; i < lazy.points.size(); ++i)
                if (lazy.site_index[i] == full.site_index[j]) present = true;
            CHECK(present);
        }
    }
}

TEST_CASE("poisson statistics") {
    DisplacementLaw law{LawKind::poisson, 0.0, 2};
    Box win = Box(2, Pt{5, 5, 0}, Pt{10, 10, 0});
    double sum = 0.0;
    int reps = 10000;
    for (int i = 0; i < reps; ++i) {
        PointConfiguration c = sample_configuration(law, win, 1.0, 77, uint64_t(i));
        sum += double(c.points.size());
    }
    double mean = sum / reps;
    CHECK(std::fabs(mean - 100.0) < 3.0 * 10.0 / std::sqrt(double(reps)));
}

TEST_CASE("mean intensity near one for all kinds") {
    Box win = Box::cube(2, Pt{0, 0, 0}, 12.0);
    Box sub = Box::cube(2, Pt{0, 0, 0}, 6.0);
    struct Case { DisplacementLaw law; double trunc; };
    std::vector<Case> cases = {
        {{LawKind::uniform_ball, 0.0, 2}, 2.0},
        {{LawKind::power_tail, 2.0, 2}, 7.0},
        {{LawKind::power_tail, 1.0, 2}, 40.0},
        {{LawKind::shifted_power, 2.0, 2}, 7.0},
        {{LawKind::poisson, 0.0, 2}, 1.0},
    };
    for (const auto& cs : cases) {
        std::vector<PointConfiguration> ens;
        for (int i = 0; i < 40; ++i)
            ens.push_back(sample_configuration(cs.law, win, cs.trunc, 1234, uint64_t(i)));
        IntensityEstimate est = mean_intensity(ens, sub);
        INFO(law_kind_name(cs.law.kind), " intensity ", est.mean, " +- ", est.stderr_);
        CHECK(std::fabs(est.mean - 1.0) < 3.0 * est.stderr_ + 1e-9);
    }
    std::vector<PointConfiguration> tiny;
    CHECK_THROWS_AS(mean_intensity(tiny, sub), std::invalid_argument);
}

TEST_CASE("configuration csv round trip") {
    DisplacementLaw law{LawKind::power_tail, 2.0, 2};
    Box win = Box::cube(2, Pt{0, 0, 0}, 4.0);
    PointConfiguration a = sample_configuration(law, win, 7.0, 3, 9);
    write_configuration_csv(a, "cfg_test.csv", "cfg_test.json");
    PointConfiguration b = read_configuration_csv("cfg_test.csv", "cfg_test.json");
    REQUIRE(a.points.size() == b.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i][0] == b.points[i][0]);  // shortest round-trip form is exact
        CHECK(a.points[i][1] == b.points[i][1]);
        CHECK(a.site_index[i] == b.site_index[i]);
    }
    CHECK(b.seed == a.seed);
    CHECK(b.stream == a.stream);
}
