#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flownav/error.hpp"
#include "flownav/flow_field.hpp"
#include "flownav/interp.hpp"
#include "flownav/rng.hpp"
#include "support.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

using namespace flownav;
using namespace flownav::interp;
using flownav::testing::TempDir;

namespace {

store::FieldBlock make_block(store::Index3 dims, Vec3 origin, Vec3 h, const std::function<Vec3(const Vec3&)>& f) {
    store::FieldBlock b;
    b.dims = dims;
    b.phys_min = origin;
    b.spacing = h;
    const auto n = b.point_count();
    b.u.resize(n);
    b.v.resize(n);
    b.w.resize(n);
    for (std::size_t k = 0; k < dims[2]; ++k)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t i = 0; i < dims[0]; ++i) {
                const Vec3 p{origin.x + double(i) * h.x, origin.y + double(j) * h.y, origin.z + double(k) * h.z};
                const Vec3 v = f(p);
                b.u[b.linear(i, j, k)] = float(v.x);
                b.v[b.linear(i, j, k)] = float(v.y);
                b.w[b.linear(i, j, k)] = float(v.z);
            }
    return b;
}

/// Direct Catmull-Rom in one variable, written from the Hermite form.
double hermite(double p0, double p1, double p2, double p3, double s) {
    const double m1 = 0.5 * (p2 - p0), m2 = 0.5 * (p3 - p1);
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * p1 + (s3 - 2 * s2 + s) * m1 + (-2 * s3 + 3 * s2) * p2 + (s3 - s2) * m2;
}

}  // namespace

TEST_CASE("Catmull-Rom weights") {
    for (double s : {0.0, 0.125, 0.5, 0.8, 1.0}) {
        for (bool l : {false, true})
            for (bool r : {false, true}) {
                const auto w = catmull_rom_weights(s, l, r);
                CHECK(w[0] + w[1] + w[2] + w[3] == doctest::Approx(1.0).epsilon(1e-15));
                // Linear data on nodes -1, 0, 1, 2 is reproduced with any clamping.
                CHECK(-w[0] + w[2] + 2 * w[3] == doctest::Approx(s).epsilon(1e-15));
            }
        CHECK(catmull_rom(0.3, -1.2, 2.5, 4.0, s) == doctest::Approx(hermite(0.3, -1.2, 2.5, 4.0, s)).epsilon(1e-14));
    }
    const auto w0 = catmull_rom_weights(0.0, false, false);
    CHECK(w0 == std::array<double, 4>{0, 1, 0, 0});
    const auto w1 = catmull_rom_weights(1.0, false, false);
    CHECK(w1 == std::array<double, 4>{0, 0, 1, 0});
    // Quadratic p(x) = x^2 on nodes -1..2 is exact with central tangents.
    for (double s : {0.25, 0.5, 0.9}) CHECK(catmull_rom(1, 0, 1, 4, s) == doctest::Approx(s * s).epsilon(1e-15));
    // One missing neighbour: the one-sided tangent keeps quadratics exact.
    for (double s : {0.25, 0.5, 0.9}) {
        CHECK(catmull_rom(0, 0, 1, 4, s, true, false) == doctest::Approx(s * s).epsilon(1e-15));
        CHECK(catmull_rom(1, 0, 1, 1, s, false, true) == doctest::Approx(s * s).epsilon(1e-15));
    }
}

TEST_CASE("tricubic reproduces constant, nodal and linear values") {
    const auto lin = [](const Vec3& p) { return Vec3{2 * p.x + 3 * p.y - p.z, 5.0, -p.y}; };
    const auto b = make_block({10, 10, 10}, {-1, 0, 2}, {0.25, 0.125, 0.5}, lin);
    Rng rng(3);
    for (int q = 0; q < 200; ++q) {
        const Vec3 p{rng.uniform(-1, 1.25), rng.uniform(0, 1.125), rng.uniform(2, 6.5)};
        const auto r = tricubic_interp(b, p);
        const Vec3 want = lin(p);
        CHECK(flownav::testing::rel_err(r.value.u, want.x) <= 1e-12);
        CHECK(r.value.v == doctest::Approx(5.0).epsilon(1e-15));
        CHECK(flownav::testing::rel_err(r.value.w, want.z) <= 1e-12);
        CHECK(r.inside);
    }
    // Nodal values are returned exactly, even at clamped edges.
    const auto odd = make_block({6, 5, 4}, {0, 0, 0}, {1, 1, 1},
                                [](const Vec3& p) { return Vec3{std::sin(p.x * 7 + p.y), p.z * p.z, std::cos(p.x * p.y)}; });
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t i = 0; i < 6; ++i) {
                const auto r = tricubic_interp(odd, {double(i), double(j), double(k)});
                const std::size_t n = odd.linear(i, j, k);
                CHECK(r.value.u == double(odd.u[n]));
                CHECK(r.value.v == double(odd.v[n]));
                CHECK(r.value.w == double(odd.w[n]));
            }
    CHECK(tricubic_interp(odd, {2.5, 2.5, 1.5}).full_stencil);
    CHECK_FALSE(tricubic_interp(odd, {0.5, 2.5, 1.5}).full_stencil);
    CHECK_FALSE(tricubic_interp(odd, {2.5, 2.5, 2.5}).full_stencil);
    CHECK_FALSE(tricubic_interp(odd, {9.0, 2.5, 1.5}).inside);

    auto bad = odd;
    bad.spacing.y = 0.0;
    CHECK_THROWS_AS(tricubic_interp(bad, {1, 1, 1}), Error);
}

TEST_CASE("tricubic with a reduced valid extent ignores padding") {
    const auto f = [](const Vec3& p) { return Vec3{3 * p.x, p.y, p.z}; };
    auto b = make_block({6, 4, 4}, {0, 0, 0}, {1, 1, 1}, f);
    // Replace the last two x-planes with copies of x = 3 (replicate-edge padding).
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t i = 4; i < 6; ++i) b.u[b.linear(i, j, k)] = b.u[b.linear(3, j, k)];
    const auto padded = tricubic_interp(b, {2.5, 1.5, 1.5});
    const auto honest = tricubic_interp(b, {2.5, 1.5, 1.5}, {4, 4, 4});
    CHECK(padded.full_stencil);
    CHECK(padded.value.u != doctest::Approx(7.5));
    CHECK_FALSE(honest.full_stencil);
    CHECK(honest.value.u == doctest::Approx(7.5).epsilon(1e-14));
}

TEST_CASE("trilinear inside a cell") {
    const auto f = [](const Vec3& p) { return Vec3{p.x * p.y * p.z, 1 + p.x, -p.z}; };
    const auto b = make_block({4, 4, 4}, {0, 0, 0}, {0.5, 0.5, 0.5}, f);
    const Vec3 p{0.6, 1.1, 0.3};
    const auto r = trilinear_interp(b, p);
    CHECK(r.u == doctest::Approx(p.x * p.y * p.z).epsilon(1e-14));
    CHECK(r.v == doctest::Approx(1.6).epsilon(1e-14));
}

TEST_CASE("temporal stencil and blend") {
    const std::vector<double> times{0, 1, 2, 3, 4};
    auto s = make_temporal_stencil(times, 1.5);
    CHECK(s.index == std::array<std::size_t, 4>{0, 1, 2, 3});
    CHECK(s.alpha == 0.5);
    s = make_temporal_stencil(times, 0.25);
    CHECK(s.index == std::array<std::size_t, 4>{0, 0, 1, 2});
    CHECK(s.clamped_left());
    s = make_temporal_stencil(times, 3.75);
    CHECK(s.index == std::array<std::size_t, 4>{2, 3, 4, 4});
    CHECK(s.clamped_right());
    CHECK(s.alpha == 0.75);
    CHECK_THROWS_AS(make_temporal_stencil(times, 0.0), Error);
    CHECK_THROWS_AS(make_temporal_stencil(times, 4.0), Error);

    const std::array<VelocitySample, 4> samples{{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}, {10, 11, 13}}};
    TemporalStencil st = make_temporal_stencil(times, 1.5);
    st.alpha = 0.0;
    CHECK(cubic_temporal_interp(st, samples) == samples[1]);
    st.alpha = 1.0;
    CHECK(cubic_temporal_interp(st, samples) == samples[2]);

    // t^2 sampled at t = 0..3, evaluated at the 1.5 midpoint.
    st = make_temporal_stencil(times, 1.5);
    const std::array<VelocitySample, 4> quad{{{0, 0, 0}, {1, 1, 1}, {4, 4, 4}, {9, 9, 9}}};
    CHECK(std::abs(cubic_temporal_interp(st, quad).u - 2.25) <= 1e-12 * 2.25);
}

TEST_CASE("clamp and quantize") {
    const Box d{{-2, 0, -1}, {5, 3, 1}};
    CHECK(clamp_position(d, {-5, 1, 0}) == Vec3{-2, 1, 0});
    CHECK(clamp_position(d, {1, 2, 0.5}) == Vec3{1, 2, 0.5});
    CHECK(quantize_position({1.23456, -0.0004, 2}, 3) == Vec3{1.235, -0.0, 2});
    CHECK(quantize_position({1.23456, 0, 0}, 3).x == 1.235);
}

TEST_CASE("store-backed queries") {
    TempDir dir;
    // x: 18 points, blocks [0, 9] and [8, 17]; y and z fit a single block.
    const auto m = flownav::testing::cube_mesh({18, 10, 10}, {0, 0, 0}, {0.125, 0.125, 0.125}, {0, 0.5, 1, 1.5, 2});
    const auto field = [](const Vec3& p, double t) {
        return Vec3{std::sin(3 * p.x) * std::cos(2 * p.y) + t, p.z * p.z - t * t, std::exp(-p.x) * p.y};
    };
    auto store = flownav::testing::build_store(m, field, dir.path());
    const FlowField flow(store);
    const auto& layout = store->layout();
    REQUIRE(layout.block_count() == 2);

    SUBCASE("nodal value at a grid node and snapshot time") {
        const auto r = flow.get_velocity({0.5, 0.5, 0.25}, 1.0);
        const Vec3 want = field({0.5, 0.5, 0.25}, 1.0);
        CHECK(r.value.u == double(float(want.x)));
        CHECK(r.value.v == double(float(want.y)));
        CHECK(r.value.w == double(float(want.z)));
    }

    SUBCASE("single containing block passes through unchanged") {
        const Vec3 p{0.3, 0.6, 0.7};
        const auto s = flow.spatial_interp_for_snapshot(p, 2, 8);
        CHECK(s.contributing == 1);
        const auto direct = tricubic_interp(*store->load_block(2, std::size_t{0}), p, {10, 10, 10});
        CHECK(s.value == direct.value);
    }

    SUBCASE("equidistant overlap blends to the mean") {
        const Vec3 p{0.5 * (layout.center({0, 0, 0}).x + layout.center({1, 0, 0}).x), 0.6, 0.7};
        const auto s = flow.spatial_interp_for_snapshot(p, 1, 8);
        CHECK(s.contributing == 2);
        const auto a = tricubic_interp(*store->load_block(1, std::size_t{0}), p, {10, 10, 10}).value;
        const auto b = tricubic_interp(*store->load_block(1, std::size_t{1}), p, {10, 10, 10}).value;
        CHECK(s.value.u == doctest::Approx(0.5 * (a.u + b.u)).epsilon(1e-15));
        CHECK(s.value.v == doctest::Approx(0.5 * (a.v + b.v)).epsilon(1e-15));
        CHECK(s.value.w == doctest::Approx(0.5 * (a.w + b.w)).epsilon(1e-15));
    }

    SUBCASE("temporal clamping") {
        const Vec3 p{0.4, 0.4, 0.4};
        const auto s0 = flow.spatial_interp_for_snapshot(p, 0, 8);
        CHECK(flow.get_velocity(p, -1.0).value == s0.value);
        CHECK(flow.get_velocity(p, 0.0).value == s0.value);
        const auto sN = flow.spatial_interp_for_snapshot(p, 4, 8);
        CHECK(flow.get_velocity(p, 2.0).value == sN.value);
        CHECK(flow.get_velocity(p, 7.5).value == sN.value);
        CHECK(flow.get_velocity(p, 100.0).value == flow.get_velocity(p, 3.0).value);
    }

    SUBCASE("repeated query hits the cache") {
        const Vec3 p{0.71, 0.33, 0.52};
        const auto first = flow.get_velocity(p, 0.8);
        const auto reads = store->cache().stats().disk_reads;
        const auto again = flow.get_velocity(p, 0.8);
        CHECK(again.cached);
        CHECK_FALSE(first.cached);
        CHECK(again.value == first.value);
        CHECK(store->cache().stats().disk_reads == reads);
        // A fresh field over the same store recomputes the identical value.
        const FlowField other(store);
        CHECK(other.get_velocity(p, 0.8).value == first.value);
        // Positions that quantize to the same key share the entry.
        CHECK(flow.get_velocity({0.7100000001, 0.33, 0.52}, 0.8).value == first.value);
    }

    SUBCASE("outside the domain clamps") {
        CHECK(flow.get_velocity({-3, 0.5, 0.5}, 0.7).value == flow.get_velocity({0, 0.5, 0.5}, 0.7).value);
    }
}

TEST_CASE("overlap with full stencils in both blocks agrees") {
    TempDir dir;
    auto m = flownav::testing::cube_mesh({16, 10, 10}, {0, 0, 0}, {0.1, 0.1, 0.1}, {0});
    m.block_stride = {6, 8, 8};
    const auto field = [](const Vec3& p, double) {
        return Vec3{std::sin(2 * p.x) * std::cos(p.y + p.z), std::exp(0.3 * p.x), p.x * p.y * p.z};
    };
    auto store = flownav::testing::build_store(m, field, dir.path());
    const FlowField flow(store);
    Rng rng(8);
    for (int q = 0; q < 50; ++q) {
        const Vec3 p{rng.uniform(0.7, 0.8), rng.uniform(0.1, 0.8), rng.uniform(0.1, 0.8)};
        const auto a = tricubic_interp(*store->load_block(0, std::size_t{0}), p, {10, 10, 10});
        const auto b = tricubic_interp(*store->load_block(0, std::size_t{1}), p, {10, 10, 10});
        REQUIRE(a.full_stencil);
        REQUIRE(b.full_stencil);
        CHECK(std::abs(a.value.u - b.value.u) <= 1e-9);
        CHECK(std::abs(a.value.v - b.value.v) <= 1e-9);
        CHECK(std::abs(a.value.w - b.value.w) <= 1e-9);
        const auto s = flow.spatial_interp_for_snapshot(p, 0, 8);
        CHECK(s.contributing == 2);
        CHECK(std::abs(s.value.u - a.value.u) <= 1e-9);
    }
}

TEST_CASE("separable field a(t) g(x)") {
    TempDir dir;
    // Dyadic spacing and times keep stored floats exact.
    const auto m = flownav::testing::cube_mesh({12, 12, 12}, {0, 0, 0}, {0.0625, 0.0625, 0.0625},
                                               {0, 0.25, 0.5, 0.75, 1.0, 1.25});
    const auto a = [](double t) { return 1 + 2 * t - t * t; };
    const auto g = [](const Vec3& p) { return (1 + p.x) * (2 - p.y) * (0.5 + p.z); };
    auto store = flownav::testing::build_store(
        m, [&](const Vec3& p, double t) { return Vec3{a(t) * g(p), a(t), g(p)}; }, dir.path());
    const FlowField flow(store);
    Rng rng(4);
    for (int q = 0; q < 200; ++q) {
        const Vec3 p = quantize_position({rng.uniform(0, 0.6875), rng.uniform(0, 0.6875), rng.uniform(0, 0.6875)}, 6);
        const double t = rng.uniform(0.25, 1.0);
        const auto r = flow.get_velocity(p, t);
        CHECK(r.ok);
        CHECK(std::abs(r.value.u - a(t) * g(p)) <= 1e-9 * std::max(1.0, std::abs(a(t) * g(p))));
        CHECK(std::abs(r.value.v - a(t)) <= 1e-9 * std::abs(a(t)));
    }
}

TEST_CASE("store failure falls back to the last valid velocity") {
    TempDir dir;
    const auto m = flownav::testing::cube_mesh({18, 10, 10}, {0, 0, 0}, {0.125, 0.125, 0.125}, {0, 1});
    auto store = flownav::testing::build_store(m, [](const Vec3& p, double) { return Vec3{1 + p.x, 0, 0}; }, dir.path());
    const FlowField flow(store);
    const auto good = flow.get_velocity({0.25, 0.5, 0.5}, 0.0);
    REQUIRE(good.ok);
    std::filesystem::remove(dir / store::block_file_name(0, {1, 0, 0}));
    const auto bad = flow.get_velocity({2.0, 0.5, 0.5}, 0.0);
    CHECK_FALSE(bad.ok);
    CHECK(bad.value == good.value);
    CHECK(flow.last_valid_velocity() == good.value);
    const FlowQuery q = flow.sample({2.0, 0.5, 0.5}, 0.0);
    CHECK_FALSE(q.ok);
}

TEST_CASE("query cache stays bounded") {
    TempDir dir;
    const auto m = flownav::testing::cube_mesh({10, 10, 10}, {0, 0, 0}, {0.125, 0.125, 0.125}, {0});
    auto store = flownav::testing::build_store(m, [](const Vec3& p, double) { return Vec3{p.x, p.y, p.z}; }, dir.path());
    FlowFieldConfig cfg;
    cfg.query_cache_capacity = 16;
    const FlowField flow(store, cfg);
    for (int i = 0; i < 100; ++i) {
        flow.get_velocity({0.01 * i, 0.5, 0.5}, 0.0);
        CHECK(flow.query_cache_size() <= 16);
    }
}
