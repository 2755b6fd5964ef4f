#include "flownav/bspline.hpp"

#include "flownav/error.hpp"

#include <algorithm>

namespace flownav::zermelo {

std::vector<double> clamped_uniform_knots(std::size_t count, int degree) {
    if (degree < 1 || count < std::size_t(degree) + 1)
        throw Error("degenerate_trajectory", "need at least degree + 1 control points");
    const std::size_t p = std::size_t(degree);
    const std::size_t m = count + p + 1;
    std::vector<double> knots(m, 0.0);
    const std::size_t interior = count - p;  // number of spans
    for (std::size_t i = 0; i < m; ++i) {
        if (i <= p) knots[i] = 0.0;
        else if (i >= count) knots[i] = 1.0;
        else knots[i] = double(i - p) / double(interior);
    }
    return knots;
}

std::size_t find_span(const std::vector<double>& knots, int degree, std::size_t count, double u) {
    const std::size_t p = std::size_t(degree);
    if (u >= knots[count]) return count - 1;
    if (u <= knots[p]) return p;
    auto it = std::upper_bound(knots.begin() + std::ptrdiff_t(p), knots.begin() + std::ptrdiff_t(count) + 1, u);
    return std::size_t(it - knots.begin()) - 1;
}

void basis_with_derivative(const std::vector<double>& U, int degree, std::size_t span, double u,
                           std::vector<double>& values, std::vector<double>& derivs) {
    const int p = degree;
    // ndu table with basis values in the upper triangle and knot differences below it.
    std::vector<std::vector<double>> ndu(std::size_t(p + 1), std::vector<double>(std::size_t(p + 1), 0.0));
    std::vector<double> left(std::size_t(p + 1)), right(std::size_t(p + 1));
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[std::size_t(j)] = u - U[span + 1 - std::size_t(j)];
        right[std::size_t(j)] = U[span + std::size_t(j)] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[std::size_t(j)][std::size_t(r)] = right[std::size_t(r + 1)] + left[std::size_t(j - r)];
            const double temp = ndu[std::size_t(r)][std::size_t(j - 1)] / ndu[std::size_t(j)][std::size_t(r)];
            ndu[std::size_t(r)][std::size_t(j)] = saved + right[std::size_t(r + 1)] * temp;
            saved = left[std::size_t(j - r)] * temp;
        }
        ndu[std::size_t(j)][std::size_t(j)] = saved;
    }
    values.assign(std::size_t(p + 1), 0.0);
    derivs.assign(std::size_t(p + 1), 0.0);
    for (int j = 0; j <= p; ++j) values[std::size_t(j)] = ndu[std::size_t(j)][std::size_t(p)];
    // First derivative: N'_{i,p} = p * (N_{i,p-1} / (u_{i+p} - u_i) - N_{i+1,p-1} / (u_{i+p+1} - u_{i+1})).
    for (int r = 0; r <= p; ++r) {
        double d = 0.0;
        if (r >= 1) d += ndu[std::size_t(r - 1)][std::size_t(p - 1)] / ndu[std::size_t(p)][std::size_t(r - 1)];
        if (r <= p - 1) d -= ndu[std::size_t(r)][std::size_t(p - 1)] / ndu[std::size_t(p)][std::size_t(r)];
        derivs[std::size_t(r)] = double(p) * d;
    }
}

BSpline::BSpline(std::vector<Vec3> control_points, int degree)
    : points_(std::move(control_points)), degree_(degree), knots_(clamped_uniform_knots(points_.size(), degree)) {}

Vec3 BSpline::evaluate(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    const std::size_t span = find_span(knots_, degree_, points_.size(), u);
    std::vector<double> n, dn;
    basis_with_derivative(knots_, degree_, span, u, n, dn);
    Vec3 out;
    for (int r = 0; r <= degree_; ++r) out += points_[span - std::size_t(degree_) + std::size_t(r)] * n[std::size_t(r)];
    return out;
}

Vec3 BSpline::derivative(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    const std::size_t span = find_span(knots_, degree_, points_.size(), u);
    std::vector<double> n, dn;
    basis_with_derivative(knots_, degree_, span, u, n, dn);
    Vec3 out;
    for (int r = 0; r <= degree_; ++r) out += points_[span - std::size_t(degree_) + std::size_t(r)] * dn[std::size_t(r)];
    return out;
}

std::vector<double> BSpline::greville() const {
    std::vector<double> g(points_.size());
    for (std::size_t j = 0; j < points_.size(); ++j) {
        double s = 0.0;
        for (int r = 1; r <= degree_; ++r) s += knots_[j + std::size_t(r)];
        g[j] = s / double(degree_);
    }
    return g;
}

}  // namespace flownav::zermelo
