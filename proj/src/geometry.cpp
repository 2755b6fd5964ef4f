#include "flownav/geometry.hpp"

#include <limits>

namespace flownav {

double Scene::min_obstacle_distance(const Vec3& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : obstacles) best = std::min(best, b.distance(p));
    return best;
}

Scene reference_scene() {
    Scene s;
    s.domain = {{-2.0, 0.0, -1.0}, {5.0, 3.0, 1.0}};
    s.obstacles = {
        {{-0.25, 0.0, -0.25}, {0.25, 1.0, 0.25}},
        {{1.25, 0.0, -0.25}, {1.75, 0.5, 0.25}},
    };
    s.ground = true;
    return s;
}

}  // namespace flownav
