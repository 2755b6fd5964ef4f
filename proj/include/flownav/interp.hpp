#pragma once

#include "flownav/block_file.hpp"

#include <array>
#include <span>

namespace flownav::interp {

/// Interpolated velocity in units of U_inf.
struct VelocitySample {
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;

    Vec3 vec() const { return {u, v, w}; }
    static VelocitySample from(const Vec3& a) { return {a.x, a.y, a.z}; }
    bool finite() const { return vec().finite(); }
    friend bool operator==(const VelocitySample&, const VelocitySample&) = default;
};

/// Weights on (p0, p1, p2, p3) for the uniform Catmull-Rom segment between p1 and p2 at
/// parameter s. Tangents are central differences; at a clamped end (its outer sample is a
/// duplicate) the tangent is the second-order one-sided difference over the three real samples.
std::array<double, 4> catmull_rom_weights(double s, bool clamped_left, bool clamped_right);

double catmull_rom(double p0, double p1, double p2, double p3, double s, bool clamped_left = false,
                   bool clamped_right = false);

struct TricubicResult {
    VelocitySample value;
    bool full_stencil = true;  ///< all 4x4x4 stencil nodes were inside the block
    bool inside = true;        ///< query lay within the block bounds
};

/// Tensor-product Catmull-Rom over the 4x4x4 nodes around the containing cell.
/// Positions outside the block extrapolate from the nearest edge cell.
TricubicResult tricubic_interp(const store::FieldBlock& block, const Vec3& position);
/// Same, with stencils clamped to the first `valid` nodes per axis (edge blocks carry
/// replicated padding past the grid).
TricubicResult tricubic_interp(const store::FieldBlock& block, const Vec3& position, const store::Index3& valid);

/// Trilinear interpolation inside the containing cell (clamped to the block).
VelocitySample trilinear_interp(const store::FieldBlock& block, const Vec3& position);

/// Four clamped snapshot indices around t with the blend factor for the [t_i1, t_i2] interval.
struct TemporalStencil {
    std::array<std::size_t, 4> index{0, 0, 0, 0};
    std::array<double, 4> time{0, 0, 0, 0};
    double alpha = 0.0;

    bool clamped_left() const { return index[0] == index[1]; }
    bool clamped_right() const { return index[3] == index[2]; }
};

/// Requires times.front() < t < times.back() (callers handle the clamped ends).
TemporalStencil make_temporal_stencil(std::span<const double> times, double t);

VelocitySample cubic_temporal_interp(const TemporalStencil& stencil, const std::array<VelocitySample, 4>& samples);

}  // namespace flownav::interp
