#pragma once

#include "flownav/vec3.hpp"

#include <algorithm>
#include <vector>

namespace flownav {

/// Axis-aligned box, closed on all faces.
struct Box {
    Vec3 min;
    Vec3 max;

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
    bool contains(const Box& b) const { return contains(b.min) && contains(b.max); }
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }
    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }

    Vec3 clamp(const Vec3& p) const {
        return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
                std::clamp(p.z, min.z, max.z)};
    }

    /// Euclidean distance from p to the box; 0 inside.
    double distance(const Vec3& p) const { return (p - clamp(p)).norm(); }

    /// Negative depth inside the box, Euclidean distance outside.
    double signed_distance(const Vec3& p) const {
        if (!contains(p)) return distance(p);
        double depth = std::min({p.x - min.x, max.x - p.x, p.y - min.y, max.y - p.y, p.z - min.z,
                                 max.z - p.z});
        return -depth;
    }

    friend bool operator==(const Box&, const Box&) = default;
};

/// The navigation scene: domain box, building obstacles and an optional ground plane at y = 0.
struct Scene {
    Box domain;
    std::vector<Box> obstacles;
    bool ground = true;

    bool collides(const Vec3& p) const {
        if (ground && p.y < 0.0) return true;
        return std::any_of(obstacles.begin(), obstacles.end(),
                           [&](const Box& b) { return b.contains(p); });
    }
    bool in_bounds(const Vec3& p) const { return domain.contains(p); }

    /// Minimum distance to any obstacle box; +inf when there are none.
    double min_obstacle_distance(const Vec3& p) const;
};

/// The two-building configuration used throughout (units of obstacle height h).
Scene reference_scene();

}  // namespace flownav
