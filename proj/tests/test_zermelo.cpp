#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flownav/error.hpp"
#include "flownav/rng.hpp"
#include "flownav/zermelo.hpp"

#include <cmath>
#include <numbers>

using namespace flownav;
using namespace flownav::zermelo;

namespace {

Scene open_scene() { return {{{-2, 0, -1}, {5, 3, 1}}, {}, true}; }

FrozenFlow still() {
    return [](const Vec3&) { return Vec3{}; };
}

/// Cox-de Boor recursion, straight from the definition.
double cox_de_boor(const std::vector<double>& U, std::size_t i, int p, double u) {
    if (p == 0) {
        const bool last = u == U.back() && U[i] < U[i + 1] && U[i + 1] == U.back();
        return (U[i] <= u && u < U[i + 1]) || last ? 1.0 : 0.0;
    }
    double a = 0.0, b = 0.0;
    if (U[i + std::size_t(p)] != U[i]) a = (u - U[i]) / (U[i + std::size_t(p)] - U[i]) * cox_de_boor(U, i, p - 1, u);
    if (U[i + std::size_t(p) + 1] != U[i + 1])
        b = (U[i + std::size_t(p) + 1] - u) / (U[i + std::size_t(p) + 1] - U[i + 1]) * cox_de_boor(U, i + 1, p - 1, u);
    return a + b;
}

}  // namespace

TEST_CASE("clamped knots and basis") {
    const auto U = clamped_uniform_knots(12, 3);
    REQUIRE(U.size() == 16);
    for (int i = 0; i < 4; ++i) {
        CHECK(U[std::size_t(i)] == 0.0);
        CHECK(U[std::size_t(15 - i)] == 1.0);
    }
    CHECK(U[4] == doctest::Approx(1.0 / 9));
    CHECK_THROWS_AS(clamped_uniform_knots(3, 3), Error);

    for (double u : {0.0, 0.03, 0.2, 0.5, 0.77, 0.999, 1.0}) {
        const std::size_t span = find_span(U, 3, 12, u);
        std::vector<double> n, dn;
        basis_with_derivative(U, 3, span, u, n, dn);
        double sum = 0.0, dsum = 0.0;
        for (int r = 0; r < 4; ++r) {
            sum += n[std::size_t(r)];
            dsum += dn[std::size_t(r)];
            CHECK(n[std::size_t(r)] == doctest::Approx(cox_de_boor(U, span - 3 + std::size_t(r), 3, u)).epsilon(1e-13));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(dsum == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("curve endpoints, derivative and Greville line") {
    Rng rng(6);
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const BSpline c(pts, 3);
    CHECK(c.evaluate(0.0) == pts.front());
    CHECK(distance(c.evaluate(1.0), pts.back()) < 1e-15);
    for (double u : {0.1, 0.33, 0.6, 0.9}) {
        const double h = 1e-6;
        const Vec3 fd = (c.evaluate(u + h) - c.evaluate(u - h)) * (1 / (2 * h));
        CHECK(distance(fd, c.derivative(u)) < 1e-7);
    }
    // Control points at the Greville abscissae of a line give constant parametric speed.
    ZermeloConfig cfg;
    const Vec3 a{-1, 1, 0}, b{3, 2, 0.5};
    const auto line = straight_line(a, b, 2.0, cfg);
    for (double u : {0.0, 0.1, 0.45, 0.8, 1.0}) {
        CHECK(distance(line.curve.evaluate(u), a + (b - a) * u) < 1e-14);
        CHECK(distance(line.curve.derivative(u), b - a) < 1e-12);
    }
    CHECK(distance(line.velocity(0.7), (b - a) * 0.5) < 1e-12);
}

TEST_CASE("cost terms") {
    ZermeloConfig cfg;
    const Scene scene = reference_scene();
    SUBCASE("on-surface obstacle potential") {
        Scene one{scene.domain, {scene.obstacles[0]}, true};
        CHECK(obstacle_potential({0.25, 0.5, 0}, one, cfg) == doctest::Approx(cfg.alpha));
        CHECK(obstacle_potential({0.75, 0.5, 0}, one, cfg) == doctest::Approx(cfg.alpha * std::exp(-cfg.beta * 0.5)));
        // Deeper inside costs more, so gradients point out of the box.
        CHECK(obstacle_potential({0.0, 0.5, 0}, one, cfg) > obstacle_potential({0.2, 0.5, 0}, one, cfg));
    }
    SUBCASE("ending at the target has no terminal cost") {
        const auto line = straight_line({-1.5, 1.5, 0}, {3.5, 2, 0}, 3.0, cfg);
        const auto c = trajectory_cost(line, still(), open_scene(), {3.5, 2, 0}, cfg);
        CHECK(c.terminal == doctest::Approx(0.0).scale(1.0).epsilon(1e-20));
        CHECK(c.time == 3.0);
        CHECK(c.total == doctest::Approx(c.time + c.control + c.obstacle + c.terminal + c.bounds));
        const auto miss = trajectory_cost(line, still(), open_scene(), {3.5, 2.5, 0}, cfg);
        CHECK(miss.terminal == doctest::Approx(cfg.kappa * 0.25));
    }
    SUBCASE("unit-speed line with R = I") {
        cfg.R = Eigen::Matrix3d::Identity();
        const auto line = straight_line({-1, 1, 0}, {3, 1, 0}, 4.0, cfg);
        const auto c = trajectory_cost(line, still(), open_scene(), {3, 1, 0}, cfg);
        CHECK(c.control == doctest::Approx(0.5 * 4.0).epsilon(1e-10));
        CHECK(c.bounds == 0.0);
    }
    SUBCASE("flow changes the required airspeed") {
        cfg.R = Eigen::Matrix3d::Identity();
        const auto line = straight_line({-1, 1, 0}, {3, 1, 0}, 4.0, cfg);
        const FrozenFlow tail = [](const Vec3&) { return Vec3{1, 0, 0}; };
        CHECK(trajectory_cost(line, tail, open_scene(), {3, 1, 0}, cfg).control == doctest::Approx(0.0).scale(1.0));
        const auto pc = planned_control(line, tail, 2.0);
        CHECK(pc.thrust == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("speed above the bound is penalized") {
        const auto fast = straight_line({-1, 1, 0}, {3, 1, 0}, 1.0, cfg);  // speed 4 > 2
        CHECK(trajectory_cost(fast, still(), open_scene(), {3, 1, 0}, cfg).bounds ==
              doctest::Approx(cfg.bound_weight * 4.0 * 1.0).epsilon(1e-9));
    }
    SUBCASE("quadrature converges") {
        std::vector<Vec3> pts;
        for (int i = 0; i < 12; ++i) pts.push_back({-1.5 + 0.5 * i, 1.5 + 0.4 * std::sin(0.7 * i), 0.3 * std::cos(i)});
        const SplineTrajectory wavy{BSpline(pts, 3), 4.0};
        double prev = 0.0;
        for (int m : {50, 100, 200, 400, 800}) {
            cfg.quadrature_points = m;
            const double j = trajectory_cost(wavy, still(), scene, {4, 1, 0}, cfg).total;
            if (m >= 200) CHECK(std::abs(j - prev) / std::abs(j) < 1e-3);
            prev = j;
        }
    }
    SUBCASE("invalid weights") {
        cfg.R(0, 1) = 5.0;
        CHECK_THROWS_AS(cfg.validate(), Error);
    }
}

TEST_CASE("optimizer in still air without obstacles") {
    ZermeloConfig cfg;
    const Vec3 a{-1.5, 1.5, 0.2}, b{3.5, 1.0, -0.3};
    const auto r = optimize(a, b, still(), open_scene(), cfg);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.cost.total <= r.straight_cost.total);
    CHECK(path_length(r.trajectory) <= 1.01 * distance(a, b));
    CHECK(distance(r.trajectory.position(r.trajectory.final_time), b) < 0.25);
    CHECK(r.trajectory.position(0) == a);
    CHECK(r.trajectory.final_time >= distance(a, b) / cfg.u_max);
}

TEST_CASE("obstacle on the straight line") {
    ZermeloConfig cfg;
    Scene scene = open_scene();
    scene.obstacles.push_back({{0.5, 0.5, -0.3}, {1.0, 2.0, 0.3}});
    const Vec3 a{-1.5, 1.2, 0}, b{3.5, 1.2, 0};
    const auto line = straight_line(a, b, 1.0, cfg);
    CHECK(path_clearance(line, scene.obstacles[0]) == 0.0);
    const auto r = optimize(a, b, still(), scene, cfg);
    CHECK(path_clearance(r.trajectory, scene.obstacles[0]) > 0.0);
    CHECK(r.cost.total < r.straight_cost.total);

    // Stronger repulsion never brings the optimal path closer.
    double prev = path_clearance(r.trajectory, scene.obstacles[0]);
    for (double alpha : {20.0, 80.0}) {
        cfg.alpha = alpha;
        const auto s = optimize(a, b, still(), scene, cfg);
        const double c = path_clearance(s.trajectory, scene.obstacles[0]);
        CHECK(c >= prev - 1e-3);
        prev = c;
    }
}

TEST_CASE("replay in still air follows the plan") {
    ZermeloConfig cfg;
    const Vec3 a{-1.5, 1.5, 0.2}, b{3.5, 1.0, -0.3};
    const auto r = optimize(a, b, still(), open_scene(), cfg);
    auto flow = interp::AnalyticFlow::uniform({0, 0, 0}, {0.0, 1.0});
    env::Environment environment(flow, open_scene());
    const auto er = replay(r.trajectory, still(), environment, b, 0);
    CHECK(er.outcome == env::Event::target);
    const double dt = environment.config().integrator.dt;
    for (std::size_t k = 0; k < er.trajectory.size(); ++k) {
        const double t = double(k + 1) * dt;
        if (t > r.trajectory.final_time) break;
        CHECK(distance(er.trajectory[k].state.position, r.trajectory.position(t)) < 1e-3);
    }
}

TEST_CASE("grid flow is trilinear") {
    store::MeshMeta m;
    m.domain_min = {0, 0, 0};
    m.domain_max = {1, 2, 3};
    m.grid_dims = {3, 5, 4};
    m.snapshot_times = {0};
    store::GridSnapshot g;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t i = 0; i < 3; ++i) {
                const double x = 0.5 * double(i), y = 0.5 * double(j), z = double(k);
                g.u.push_back(float(1 + x + 2 * y - z));
                g.v.push_back(float(x * y));
                g.w.push_back(float(x * y * z));
            }
    const GridFlow f(m, g);
    const Vec3 p{0.3, 1.7, 2.2};
    CHECK(f(p).x == doctest::Approx(1 + 0.3 + 3.4 - 2.2));
    CHECK(f(p).y == doctest::Approx(0.3 * 1.7));
    CHECK(f(p).z == doctest::Approx(0.3 * 1.7 * 2.2));
    CHECK(f({5, 5, 5}).x == doctest::Approx(1 + 1 + 4 - 3));
    CHECK_THROWS_AS(GridFlow(m, store::GridSnapshot{}), Error);
}

TEST_CASE("trajectory json") {
    ZermeloConfig cfg;
    const auto line = straight_line({0, 1, 0}, {2, 1, 0}, 2.0, cfg);
    const auto j = to_json(line, 10);
    CHECK(j["control_points"].size() == 12);
    CHECK(j["path"].size() == 11);
    CHECK(j["final_time"] == 2.0);
    CHECK(j["knots"].size() == 16);
}

TEST_CASE("uniform cross-flow gives the constant Zermelo heading") {
    ZermeloConfig cfg;
    const Scene scene{{{-1, 0, -3}, {11, 3, 3}}, {}, false};
    const double c = 0.5;
    const FrozenFlow cross = [c](const Vec3&) { return Vec3{0, 0, c}; };
    const auto r = optimize({0, 1.5, 0}, {10, 1.5, 0}, cross, scene, cfg);
    // Time dominates the control weight, so the airspeed bound is active and
    // the heading cancels the cross component at full speed.
    const double want = -std::asin(c / cfg.u_max);
    for (double u : {0.25, 0.5, 0.75}) {
        const auto pc = planned_control(r.trajectory, cross, u * r.trajectory.final_time);
        CHECK(std::abs(pc.theta - want) < 2.0 * std::numbers::pi / 180.0);
        CHECK(std::abs(pc.psi) < 1e-3);
    }
}
