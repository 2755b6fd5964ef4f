#pragma once

#include "flownav/vec3.hpp"

#include <vector>

namespace flownav::zermelo {

/// Clamped uniform knot vector for `count` control points of the given degree on [0, 1].
std::vector<double> clamped_uniform_knots(std::size_t count, int degree);

/// Index of the knot span containing u (last non-degenerate span for u = 1).
std::size_t find_span(const std::vector<double>& knots, int degree, std::size_t count, double u);

/// Non-zero basis values N_{span-degree..span} and their first derivatives at u.
void basis_with_derivative(const std::vector<double>& knots, int degree, std::size_t span, double u,
                           std::vector<double>& values, std::vector<double>& derivs);

/// B-spline curve over normalized time u = t / T_f in [0, 1].
class BSpline {
public:
    BSpline() = default;
    BSpline(std::vector<Vec3> control_points, int degree);

    const std::vector<Vec3>& control_points() const { return points_; }
    std::vector<Vec3>& control_points() { return points_; }
    const std::vector<double>& knots() const { return knots_; }
    int degree() const { return degree_; }

    Vec3 evaluate(double u) const;
    /// dC/du.
    Vec3 derivative(double u) const;

    /// Greville abscissae: control points placed at these fractions of a line reproduce it
    /// with constant parametric speed.
    std::vector<double> greville() const;

private:
    std::vector<Vec3> points_;
    int degree_ = 3;
    std::vector<double> knots_;
};

}  // namespace flownav::zermelo
