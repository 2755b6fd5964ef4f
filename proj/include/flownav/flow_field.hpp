#pragma once

#include "flownav/block_store.hpp"
#include "flownav/interp.hpp"

#include <functional>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace flownav::interp {

/// Outcome of one velocity query. `ok` is false when the store failed and `velocity` is the
/// last valid value instead of a fresh interpolation.
struct FlowQuery {
    Vec3 velocity;
    bool ok = true;
    bool extrapolated = false;
};

/// Anything that can report the flow velocity at (position, t).
class FlowSource {
public:
    virtual ~FlowSource() = default;
    virtual FlowQuery sample(const Vec3& position, double t) const = 0;
    virtual const std::vector<double>& snapshot_times() const = 0;
    virtual Vec3 grid_spacing() const = 0;
};

/// Closed-form flow, for tests and synthetic scenes.
class AnalyticFlow final : public FlowSource {
public:
    using Function = std::function<Vec3(const Vec3&, double)>;

    AnalyticFlow(Function f, std::vector<double> snapshot_times, Vec3 spacing = {0.1, 0.1, 0.1})
        : f_(std::move(f)), times_(std::move(snapshot_times)), spacing_(spacing) {}

    FlowQuery sample(const Vec3& p, double t) const override { return {f_(p, t), true, false}; }
    const std::vector<double>& snapshot_times() const override { return times_; }
    Vec3 grid_spacing() const override { return spacing_; }

    static std::shared_ptr<AnalyticFlow> uniform(const Vec3& u, std::vector<double> snapshot_times);

private:
    Function f_;
    std::vector<double> times_;
    Vec3 spacing_;
};

struct FlowFieldConfig {
    std::size_t k = 8;                    ///< nearest blocks considered per snapshot
    int precision = 6;                    ///< decimal digits of the query-cache position key
    std::size_t query_cache_capacity = 1 << 20;
};

struct SpatialResult {
    VelocitySample value;
    std::size_t contributing = 0;  ///< blocks blended; 0 means the nearest-block fallback ran
    bool extrapolated = false;
    bool full_stencil = true;      ///< every contributing block had a complete 4x4x4 stencil
};

struct VelocityResult {
    VelocitySample value;
    bool ok = true;
    bool extrapolated = false;
    bool full_stencil = true;  ///< spatial stencils complete and the temporal stencil unclamped
    bool cached = false;
};

Vec3 clamp_position(const Box& domain, const Vec3& position);

/// Rounds each component to `precision` decimal digits.
Vec3 quantize_position(const Vec3& position, int precision);

/// Store-backed flow: tricubic in space, inverse-distance blending across overlapping
/// blocks, Catmull-Rom in time, memoized per (t, quantized position).
///
/// get_velocity interpolates at the quantized position, so a cache hit returns exactly
/// what recomputation would.
class FlowField final : public FlowSource {
public:
    explicit FlowField(std::shared_ptr<store::BlockStore> store, FlowFieldConfig config = {});

    SpatialResult spatial_interp_for_snapshot(const Vec3& position, std::size_t snapshot, std::size_t k) const;
    VelocityResult get_velocity(const Vec3& position, double t, std::size_t k) const;
    VelocityResult get_velocity(const Vec3& position, double t) const { return get_velocity(position, t, config_.k); }

    /// Frozen-snapshot trilinear lookup in the containing (or nearest) block.
    VelocitySample trilinear_at_snapshot(const Vec3& position, std::size_t snapshot) const;

    FlowQuery sample(const Vec3& p, double t) const override;
    const std::vector<double>& snapshot_times() const override { return store_->mesh().snapshot_times; }
    Vec3 grid_spacing() const override { return store_->mesh().spacing(); }

    Vec3 clamp(const Vec3& p) const { return clamp_position(store_->mesh().domain(), p); }
    VelocitySample last_valid_velocity() const;
    std::size_t query_cache_size() const;
    const FlowFieldConfig& config() const { return config_; }
    store::BlockStore& store() const { return *store_; }

private:
    struct Key {
        double t, x, y, z;
        std::size_t k;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& key) const;
    };

    store::Index3 valid_extent(const store::FieldBlock& block) const;
    VelocityResult compute(const Vec3& position, double t, std::size_t k) const;

    std::shared_ptr<store::BlockStore> store_;
    FlowFieldConfig config_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<Key, VelocityResult, KeyHash> cache_;
    mutable VelocitySample last_valid_;
};

}  // namespace flownav::interp
