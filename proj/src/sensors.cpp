#include "flownav/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace flownav::sensors {

namespace {
constexpr double kParallelEps = 1e-15;
}

std::optional<double> ray_box_intersect(const Vec3& origin, const Vec3& direction, const Box& box) {
    double tmin = 0.0;
    double tmax = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = origin[a], d = direction[a];
        if (std::abs(d) < kParallelEps) {
            // Parallel to this slab: hit only possible if the origin already lies within it.
            if (o < box.min[a] || o > box.max[a]) return std::nullopt;
            continue;
        }
        double t1 = (box.min[a] - o) / d;
        double t2 = (box.max[a] - o) / d;
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return std::nullopt;
    }
    return tmin;
}

std::optional<double> ray_ground_intersect(const Vec3& origin, const Vec3& direction) {
    if (origin.y <= 0.0) return 0.0;
    if (direction.y >= -kParallelEps) return std::nullopt;
    return -origin.y / direction.y;
}

double RayFan::elevation(int i) { return double(i - kElevations / 2) * (std::numbers::pi / 4.0); }
double RayFan::azimuth(int j) { return double(j - kAzimuths / 2) * (std::numbers::pi / 2.0); }

double cast_ray(const Vec3& origin, const Vec3& direction, const Scene& scene, double max_range) {
    double best = max_range;
    for (const auto& box : scene.obstacles)
        if (auto d = ray_box_intersect(origin, direction, box)) best = std::min(best, *d);
    if (scene.ground)
        if (auto d = ray_ground_intersect(origin, direction)) best = std::min(best, *d);
    return best;
}

SensorReading scan(const dynamics::UavState& state, const Scene& scene, const RayFan& fan) {
    SensorReading r;
    for (int i = 0; i < kElevations; ++i)
        for (int j = 0; j < kAzimuths; ++j) {
            const Vec3 dir = dynamics::heading(state.psi + RayFan::azimuth(j), state.theta + RayFan::elevation(i));
            r.distances[RayFan::index(i, j)] = cast_ray(state.position, dir, scene, fan.max_range);
        }
    r.forward_free = r.distances[RayFan::forward_index()] >= fan.max_range;
    if (!r.forward_free) {
        BestDirection best;
        double best_clear = -1.0, best_turn = 0.0;
        for (int i = 0; i < kElevations; ++i)
            for (int j = 0; j < kAzimuths; ++j) {
                const int n = RayFan::index(i, j);
                const double turn = std::abs(RayFan::azimuth(j)) + std::abs(RayFan::elevation(i));
                if (r.distances[n] > best_clear || (r.distances[n] == best_clear && turn < best_turn)) {
                    best_clear = r.distances[n];
                    best_turn = turn;
                    best = {RayFan::azimuth(j), RayFan::elevation(i), n};
                }
            }
        r.best_direction = best;
    }
    return r;
}

}  // namespace flownav::sensors
