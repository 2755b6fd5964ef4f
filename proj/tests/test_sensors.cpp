#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flownav/rng.hpp"
#include "flownav/sensors.hpp"

#include <cmath>
#include <numbers>

using namespace flownav;
using namespace flownav::sensors;
constexpr double pi = std::numbers::pi;

TEST_CASE("fan layout") {
    CHECK(kRays == 45);
    CHECK(RayFan::elevation(0) == doctest::Approx(-pi));
    CHECK(RayFan::elevation(8) == doctest::Approx(pi));
    CHECK(RayFan::elevation(4) == 0.0);
    CHECK(RayFan::azimuth(0) == doctest::Approx(-pi));
    CHECK(RayFan::azimuth(4) == doctest::Approx(pi));
    CHECK(RayFan::azimuth(2) == 0.0);
    for (int i = 1; i < kElevations; ++i)
        CHECK(RayFan::elevation(i) - RayFan::elevation(i - 1) == doctest::Approx(pi / 4));
    CHECK(RayFan::forward_index() == 22);
}

TEST_CASE("slab intersection examples") {
    const Box b{{1, -1, -1}, {2, 1, 1}};
    CHECK(ray_box_intersect({0, 0, 0}, {1, 0, 0}, b).value() == 1.0);
    CHECK(ray_box_intersect({1.5, 0, 0}, {1, 0, 0}, b).value() == 0.0);
    CHECK_FALSE(ray_box_intersect({0, 0, 0}, {0, 1, 0}, b).has_value());
    CHECK_FALSE(ray_box_intersect({3, 0, 0}, {1, 0, 0}, b).has_value());
    CHECK_FALSE(ray_box_intersect({0, 2, 0}, {1, 0, 0}, b).has_value());
    const Vec3 diag = Vec3{1, 1, 0} * (1 / std::sqrt(2.0));
    CHECK(ray_box_intersect({0, -0.5, 0}, diag, b).value() == doctest::Approx(std::sqrt(2.0)));
    CHECK(ray_ground_intersect({0, 1, 0}, {0, -1, 0}).value() == 1.0);
    CHECK_FALSE(ray_ground_intersect({0, 1, 0}, {1, 0, 0}).has_value());
}

TEST_CASE("empty scene reads max range everywhere") {
    Scene s{{{-10, -10, -10}, {10, 10, 10}}, {}, false};
    dynamics::UavState st;
    st.psi = 0.7;
    const auto r = scan(st, s);
    for (double d : r.distances) CHECK(d == 2.0);
    CHECK(r.forward_free);
    CHECK_FALSE(r.best_direction.has_value());
}

TEST_CASE("forward ray toward the first building") {
    const Scene scene = reference_scene();
    dynamics::UavState st;
    st.position = {-1, 0.5, 0};
    const auto r = scan(st, scene);
    CHECK(r.distances[RayFan::forward_index()] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK_FALSE(r.forward_free);
    REQUIRE(r.best_direction.has_value());
    CHECK(r.distances[r.best_direction->ray] == 2.0);
    // Among all max-clearance rays the chosen one turns least.
    const double turn = std::abs(r.best_direction->dpsi) + std::abs(r.best_direction->dtheta);
    for (int i = 0; i < kElevations; ++i)
        for (int j = 0; j < kAzimuths; ++j)
            if (r.distances[RayFan::index(i, j)] == 2.0)
                CHECK(std::abs(RayFan::azimuth(j)) + std::abs(RayFan::elevation(i)) >= turn);
}

TEST_CASE("ground is an obstacle for rays") {
    Scene s{{{-10, 0, -10}, {10, 10, 10}}, {}, true};
    dynamics::UavState st;
    st.position = {0, 0.5, 0};
    st.psi = -pi / 2;  // heading (0, -1, 0)
    const auto r = scan(st, s);
    CHECK(r.distances[RayFan::forward_index()] == doctest::Approx(0.5));
    CHECK_FALSE(r.forward_free);
}

TEST_CASE("mirror symmetry in z") {
    Scene s{{{-5, 0, -5}, {5, 5, 5}}, {{{0.5, 0.2, 0.3}, {1.0, 1.4, 0.9}}}, true};
    Scene m = s;
    m.obstacles[0] = {{0.5, 0.2, -0.9}, {1.0, 1.4, -0.3}};
    dynamics::UavState a;
    a.position = {0, 0.8, 0.1};
    a.psi = 0.2;
    a.theta = 0.3;
    dynamics::UavState b = a;
    b.position.z = -0.1;
    b.theta = -0.3;
    const auto ra = scan(a, s), rb = scan(b, m);
    // Elevation index i maps to 8 - i under z-reflection.
    for (int i = 0; i < kElevations; ++i)
        for (int j = 0; j < kAzimuths; ++j)
            CHECK(ra.distances[RayFan::index(i, j)] ==
                  doctest::Approx(rb.distances[RayFan::index(kElevations - 1 - i, j)]).epsilon(1e-12));
}

TEST_CASE("shrinking a box never shortens a ray") {
    Rng rng(11);
    for (int n = 0; n < 2000; ++n) {
        Box big{{rng.uniform(-2, 0), rng.uniform(-2, 0), rng.uniform(-2, 0)},
                {rng.uniform(0.1, 2), rng.uniform(0.1, 2), rng.uniform(0.1, 2)}};
        Box small = big;
        for (int a = 0; a < 3; ++a) {
            const double c = 0.5 * (big.min[a] + big.max[a]);
            const double f = rng.uniform(0.1, 1.0);
            small.min[a] = c - f * (c - big.min[a]);
            small.max[a] = c + f * (big.max[a] - c);
        }
        const Vec3 o{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        const Vec3 d = dynamics::heading(rng.uniform(-pi, pi), rng.uniform(-pi / 2, pi / 2));
        const Scene sb{{{-9, -9, -9}, {9, 9, 9}}, {big}, false};
        const Scene ss{{{-9, -9, -9}, {9, 9, 9}}, {small}, false};
        CHECK(cast_ray(o, d, ss, 10.0) >= cast_ray(o, d, sb, 10.0));
    }
}

TEST_CASE("turning around flips the forward ray in the x-y plane") {
    const Scene scene = reference_scene();
    dynamics::UavState a;
    a.position = {-1, 0.5, 0};
    dynamics::UavState b = a;
    b.psi = pi;
    const Vec3 fa = dynamics::heading(a.psi, a.theta), fb = dynamics::heading(b.psi, b.theta);
    CHECK(fb.x == doctest::Approx(-fa.x));
    CHECK(fb.y == doctest::Approx(-fa.y).scale(1.0));
    CHECK(fb.z == doctest::Approx(fa.z).scale(1.0));
    CHECK(scan(b, scene).forward_free);
}
