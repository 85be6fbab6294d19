#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "pltrap/geometry.hpp"
#include "pltrap/rng.hpp"

using namespace pltrap;

namespace {
Region unit_square() { return Region::box_union(2, {Box(2, Pt{0.5, 0.5, 0}, Pt{1, 1, 0})}); }
} // namespace

TEST_CASE("distance to boundary on plain boxes") {
    Region r = unit_square();
    CHECK(r.distance_to_boundary(Pt{0.5, 0.5, 0}) == doctest::Approx(0.5));
    CHECK(r.distance_to_boundary(Pt{0.0, 0.5, 0}) == doctest::Approx(0.0));
    CHECK(r.distance_to_boundary(Pt{0.25, 0.5, 0}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(r.distance_to_boundary(Pt{3.0, 0.5, 0}), std::domain_error);
}

TEST_CASE("distance to boundary with a hole") {
    Region r = Region::box_union(2, {Box(2, Pt{0.5, 0.5, 0}, Pt{1, 1, 0})},
                                 {Box::cube(2, Pt{0.5, 0.5, 0}, 0.2)});
    CHECK(r.distance_to_boundary(Pt{0.45, 0.5, 0}) == doctest::Approx(0.05));
    double brute = oracles::brute_distance({Box(2, Pt{0.5, 0.5, 0}, Pt{1, 1, 0})},
                                           {Box::cube(2, Pt{0.5, 0.5, 0}, 0.2)},
                                           Pt{0.45, 0.5, 0}, 2, 800);
    CHECK(r.distance_to_boundary(Pt{0.45, 0.5, 0}) == doctest::Approx(brute).epsilon(0.02));
}

TEST_CASE("distance on overlapping unions is exact") {
    // union of [0,1]^2 and [0.5,1.5]x[0,1] is the box [0,1.5]x[0,1]
    Region r = Region::box_union(2, {Box(2, Pt{0.5, 0.5, 0}, Pt{1, 1, 0}),
                                     Box(2, Pt{1.0, 0.5, 0}, Pt{1, 1, 0})});
    CHECK(r.distance_to_boundary(Pt{0.75, 0.5, 0}) == doctest::Approx(0.5));
    CHECK(r.distance_to_boundary(Pt{1.4, 0.5, 0}) == doctest::Approx(0.1));
}

TEST_CASE("hole functional closed forms") {
    // square side 2, theta=1 -> L^3/6 = 4/3
    Region sq2 = Region::box_union(2, {Box::cube(2, Pt{0, 0, 0}, 2.0)});
    double v = hole_functional(sq2, 1.0);
    CHECK(v == doctest::Approx(4.0 / 3.0).epsilon(0.005));
    CHECK(v == doctest::Approx(oracles::cube_functional(2.0, 1.0, 2)).epsilon(0.005));

    // unit square theta=2 -> 1/24
    double v2 = hole_functional(unit_square(), 2.0);
    CHECK(v2 == doctest::Approx(1.0 / 24.0).epsilon(0.005));
    CHECK(v2 == doctest::Approx(oracles::cube_functional(1.0, 2.0, 2)).epsilon(0.005));

    // cube side 2, theta=1 -> L^4/8 = 2
    Region cu = Region::box_union(3, {Box::cube(3, Pt{0, 0, 0}, 2.0)});
    double v3 = hole_functional(cu, 1.0);
    CHECK(v3 == doctest::Approx(2.0).epsilon(0.005));
    CHECK(v3 == doctest::Approx(oracles::cube_functional(2.0, 1.0, 3)).epsilon(0.005));

    CHECK_THROWS_AS(hole_functional(sq2, -1.0), std::invalid_argument);
}

TEST_CASE("punched region construction") {
    Region r = build_punched_region({1, 0.5, 0.1, 2});
    CHECK(r.holes().size() == 25);
    Region r2 = build_punched_region({1, 2.0, 0.1, 2});
    CHECK(r2.holes().size() == 1);
    CHECK_THROWS_AS(build_punched_region({1, 0.1, 0.2, 2}), std::invalid_argument);

    // functional order delta^theta (the punched-domain decay mechanism)
    Region r3 = build_punched_region({1, 0.25, 0.05, 2});
    double fn = hole_functional(r3, 2.0, 0.25 / 32.0);
    double scalefree = fn / (region_volume(r3) * 0.125 * 0.125);
    CHECK(scalefree > 0.1);
    CHECK(scalefree < 1.0);
}

TEST_CASE("region volume") {
    Region a = Region::box_union(2, {Box(2, Pt{1, 1, 0}, Pt{2, 2, 0})});
    CHECK(region_volume(a) == doctest::Approx(4.0));
    Region b = Region::box_union(2, {Box(2, Pt{0.5, 0.5, 0}, Pt{1, 1, 0}),
                                     Box(2, Pt{1.0, 0.5, 0}, Pt{1, 1, 0})});
    CHECK(region_volume(b) == doctest::Approx(1.5));

    // punched volume is the exact set difference: boundary-centered holes
    // contribute only their clipped area (9 full, 12 half, 4 quarter)
    Region p = build_punched_region({1, 0.5, 0.1, 2});
    double expect = 4.0 - (9 * 0.01 + 12 * 0.005 + 4 * 0.0025);
    CHECK(region_volume(p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("distance is 1-Lipschitz on random pairs") {
    Region shapes[] = {
        unit_square(),
        build_punched_region({1, 0.5, 0.2, 2}),
        build_punched_region({1, 0.4, 0.15, 3}),
    };
    Crng rng(7, 0, 0);
    for (const Region& r : shapes) {
        Box w = r.window();
        for (int it = 0; it < 300; ++it) {
            Pt a{0, 0, 0}, b{0, 0, 0};
            for (int k = 0; k < r.dim(); ++k) {
                a[k] = rng.uniform(w.lo(k), w.hi(k));
                b[k] = rng.uniform(w.lo(k), w.hi(k));
            }
            double da = r.distance_to_boundary(a), db = r.distance_to_boundary(b);
            double dist = 0.0;
            for (int k = 0; k < r.dim(); ++k) dist += (a[k] - b[k]) * (a[k] - b[k]);
            dist = std::sqrt(dist);
            CHECK(std::fabs(da - db) <= dist + 1e-9);
        }
    }
}

TEST_CASE("mask distance agrees with box-union within h*sqrt(d)") {
    Region r = build_punched_region({1, 0.5, 0.2, 2});
    double h = 1.0 / 128.0;
    Region m = r.rasterized(h);
    Crng rng(11, 0, 0);
    for (int it = 0; it < 200; ++it) {
        Pt x{rng.uniform(-0.99, 0.99), rng.uniform(-0.99, 0.99), 0};
        double de = r.distance_to_boundary(x);
        double dm = m.distance_to_boundary(x);
        CHECK(std::fabs(de - dm) <= h * std::sqrt(2.0) + 1e-9);
    }
    // conversion volume error bound: d * h * (surface measure)
    double surface = 4 * 2.0 + 25.0 * 4 * 0.2;  // outer box + holes, crude upper bound
    CHECK(std::fabs(region_volume(m) - region_volume(r)) <= 2 * h * surface);
}

TEST_CASE("functional monotone under shrinking") {
    Region outer = Region::box_union(2, {Box::cube(2, Pt{0, 0, 0}, 2.0)});
    Region inner = Region::box_union(2, {Box::cube(2, Pt{0, 0, 0}, 1.5)});
    CHECK(hole_functional(inner, 1.5) < hole_functional(outer, 1.5));
}

TEST_CASE("scaling identity r^(d+theta)") {
    Region u = build_punched_region({1, 0.5, 0.2, 2});
    double base = hole_functional(u, 2.0, 1.0 / 96.0);
    for (double f : {2.0, 3.0}) {
        Region scaled = u.scaled(f);
        double v = hole_functional(scaled, 2.0, f / 96.0);
        CHECK(v == doctest::Approx(std::pow(f, 2.0 + 2.0) * base).epsilon(0.02));
    }
}

TEST_CASE("quadrature halving converges") {
    Region sq = Region::box_union(2, {Box::cube(2, Pt{0, 0, 0}, 2.0)});
    double exact = 4.0 / 3.0;
    double e1 = std::fabs(hole_functional(sq, 1.0, 2.0 / 64.0) - exact);
    double e2 = std::fabs(hole_functional(sq, 1.0, 2.0 / 128.0) - exact);
    CHECK(e2 < e1);
    CHECK(e2 < 0.005 * exact);
}

TEST_CASE("json round trip") {
    Region r = build_punched_region({1, 0.5, 0.1, 2});
    Region back = Region::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    CHECK(back.holes().size() == r.holes().size());
    CHECK(region_volume(back) == doctest::Approx(region_volume(r)).epsilon(1e-14));

    Region m = r.rasterized(1.0 / 64.0);
    Region mback = Region::from_json(m.to_json());
    CHECK(mback.to_json() == m.to_json());
    CHECK(region_volume(mback) == region_volume(m));
}

TEST_CASE("mask to boxes keeps volume") {
    Region r = unit_square();
    Region m = r.rasterized(1.0 / 32.0);
    Region boxes = m.boxes_from_mask();
    CHECK(region_volume(boxes) == doctest::Approx(region_volume(m)).epsilon(1e-12));
}
