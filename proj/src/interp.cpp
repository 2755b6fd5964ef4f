#include "flownav/interp.hpp"

#include "flownav/error.hpp"

#include <algorithm>
#include <cmath>

namespace flownav::interp {

std::array<double, 4> catmull_rom_weights(double s, bool clamped_left, bool clamped_right) {
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    std::array<double, 4> w{};
    if (clamped_left && clamped_right) {  // two nodes: m1 = m2 = p2 - p1
        w[1] = h00 - h10 - h11;
        w[2] = h01 + h10 + h11;
    } else if (clamped_left) {  // m1 = (-3 p1 + 4 p2 - p3) / 2
        w[1] = h00 - 1.5 * h10 - 0.5 * h11;
        w[2] = h01 + 2.0 * h10;
        w[3] = -0.5 * h10 + 0.5 * h11;
    } else if (clamped_right) {  // m2 = (p0 - 4 p1 + 3 p2) / 2
        w[0] = -0.5 * h10 + 0.5 * h11;
        w[1] = h00 - 2.0 * h11;
        w[2] = h01 + 0.5 * h10 + 1.5 * h11;
    } else {
        w[0] = -0.5 * h10;
        w[1] = h00 - 0.5 * h11;
        w[2] = h01 + 0.5 * h10;
        w[3] = 0.5 * h11;
    }
    return w;
}

double catmull_rom(double p0, double p1, double p2, double p3, double s, bool clamped_left, bool clamped_right) {
    const auto w = catmull_rom_weights(s, clamped_left, clamped_right);
    return w[0] * p0 + w[1] * p1 + w[2] * p2 + w[3] * p3;
}

namespace {

struct AxisStencil {
    std::array<std::size_t, 4> idx;
    std::array<double, 4> weight;
    bool full;
};

AxisStencil axis_stencil(double coord, double origin, double h, std::size_t n) {
    const double rel = (coord - origin) / h;
    const auto last_cell = std::ptrdiff_t(n) - 2;
    auto cell = std::ptrdiff_t(std::floor(rel));
    cell = std::clamp<std::ptrdiff_t>(cell, 0, last_cell);
    const double s = rel - double(cell);
    AxisStencil a;
    const bool left = cell - 1 < 0;
    const bool right = cell + 2 > std::ptrdiff_t(n) - 1;
    a.full = !left && !right;
    for (int m = 0; m < 4; ++m)
        a.idx[m] = std::size_t(std::clamp<std::ptrdiff_t>(cell - 1 + m, 0, std::ptrdiff_t(n) - 1));
    a.weight = catmull_rom_weights(s, left, right);
    return a;
}

void check_block(const store::FieldBlock& block) {
    for (int a = 0; a < 3; ++a) {
        if (!(block.spacing[a] > 0.0)) throw Error("degenerate_block", "block spacing must be positive");
        if (block.dims[a] < 2) throw Error("degenerate_block", "block needs at least 2 nodes per axis");
    }
}

}  // namespace

TricubicResult tricubic_interp(const store::FieldBlock& block, const Vec3& position) {
    return tricubic_interp(block, position, block.dims);
}

TricubicResult tricubic_interp(const store::FieldBlock& block, const Vec3& position, const store::Index3& valid) {
    check_block(block);
    store::Index3 n;
    for (int a = 0; a < 3; ++a) n[a] = std::clamp<std::size_t>(valid[a], 2, block.dims[a]);
    const AxisStencil ax = axis_stencil(position.x, block.phys_min.x, block.spacing.x, n[0]);
    const AxisStencil ay = axis_stencil(position.y, block.phys_min.y, block.spacing.y, n[1]);
    const AxisStencil az = axis_stencil(position.z, block.phys_min.z, block.spacing.z, n[2]);

    double u = 0.0, v = 0.0, w = 0.0;
    for (int c = 0; c < 4; ++c) {
        if (az.weight[c] == 0.0) continue;
        for (int b = 0; b < 4; ++b) {
            const double wyz = ay.weight[b] * az.weight[c];
            if (wyz == 0.0) continue;
            for (int a = 0; a < 4; ++a) {
                const double wt = ax.weight[a] * wyz;
                const std::size_t n = block.linear(ax.idx[a], ay.idx[b], az.idx[c]);
                u += wt * double(block.u[n]);
                v += wt * double(block.v[n]);
                w += wt * double(block.w[n]);
            }
        }
    }
    TricubicResult r;
    r.value = {u, v, w};
    r.full_stencil = ax.full && ay.full && az.full;
    r.inside = block.bounds().contains(position);
    return r;
}

VelocitySample trilinear_interp(const store::FieldBlock& block, const Vec3& position) {
    check_block(block);
    std::array<std::size_t, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        const double rel = (position[a] - block.phys_min[a]) / block.spacing[a];
        const auto cell = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(std::floor(rel)), 0, std::ptrdiff_t(block.dims[a]) - 2);
        i0[a] = std::size_t(cell);
        f[a] = std::clamp(rel - double(cell), 0.0, 1.0);
    }
    VelocitySample out;
    for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 2; ++b)
            for (int a = 0; a < 2; ++a) {
                const double wt = (a ? f[0] : 1 - f[0]) * (b ? f[1] : 1 - f[1]) * (c ? f[2] : 1 - f[2]);
                const std::size_t n = block.linear(i0[0] + a, i0[1] + b, i0[2] + c);
                out.u += wt * double(block.u[n]);
                out.v += wt * double(block.v[n]);
                out.w += wt * double(block.w[n]);
            }
    return out;
}

TemporalStencil make_temporal_stencil(std::span<const double> times, double t) {
    const std::size_t n = times.size();
    if (n < 2 || !(t > times.front()) || !(t < times.back()))
        throw Error("invalid_argument", "temporal stencil needs t strictly inside the snapshot range");
    // i such that t_i <= t < t_{i+1}
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = std::size_t(it - times.begin()) - 1;
    TemporalStencil s;
    s.index = {i == 0 ? 0 : i - 1, i, i + 1, std::min(n - 1, i + 2)};
    for (int m = 0; m < 4; ++m) s.time[m] = times[s.index[m]];
    s.alpha = (t - times[i]) / (times[i + 1] - times[i]);
    return s;
}

VelocitySample cubic_temporal_interp(const TemporalStencil& st, const std::array<VelocitySample, 4>& p) {
    const auto w = catmull_rom_weights(st.alpha, st.clamped_left(), st.clamped_right());
    VelocitySample out;
    for (int m = 0; m < 4; ++m) {
        out.u += w[m] * p[m].u;
        out.v += w[m] * p[m].v;
        out.w += w[m] * p[m].w;
    }
    return out;
}

}  // namespace flownav::interp
