#pragma once

#include "flownav/dynamics.hpp"
#include "flownav/geometry.hpp"

#include <array>
#include <optional>

namespace flownav::sensors {

inline constexpr int kElevations = 9;
inline constexpr int kAzimuths = 5;
inline constexpr int kRays = kElevations * kAzimuths;

/// Slab-method entry distance along a unit ray; 0 when the origin is inside, nullopt on a miss.
std::optional<double> ray_box_intersect(const Vec3& origin, const Vec3& direction, const Box& box);

/// Distance along the ray to the ground plane y = 0, if it is hit ahead.
std::optional<double> ray_ground_intersect(const Vec3& origin, const Vec3& direction);

/// 9 elevation x 5 azimuth offsets, each uniformly spanning [-pi, pi] with both ends included.
/// Ray (i, j) is stored at index i * kAzimuths + j.
struct RayFan {
    double max_range = 2.0;

    static double elevation(int i);
    static double azimuth(int j);
    static constexpr int index(int i, int j) { return i * kAzimuths + j; }
    static constexpr int forward_index() { return index(kElevations / 2, kAzimuths / 2); }
};

struct BestDirection {
    double dpsi = 0.0;    ///< azimuth offset of the chosen ray
    double dtheta = 0.0;  ///< elevation offset of the chosen ray
    int ray = 0;
};

struct SensorReading {
    std::array<double, kRays> distances{};
    bool forward_free = true;
    std::optional<BestDirection> best_direction;  ///< only set when the forward ray is blocked
};

/// Casts the fan from the UAV pose; ray (i, j) points along heading(psi + az_j, theta + el_i).
SensorReading scan(const dynamics::UavState& state, const Scene& scene, const RayFan& fan = {});

/// Nearest hit over obstacles and (if enabled) the ground, capped at max_range.
double cast_ray(const Vec3& origin, const Vec3& direction, const Scene& scene, double max_range);

}  // namespace flownav::sensors
