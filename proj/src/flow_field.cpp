#include "flownav/flow_field.hpp"

#include "flownav/error.hpp"

#include <bit>
#include <cmath>

namespace flownav::interp {

std::shared_ptr<AnalyticFlow> AnalyticFlow::uniform(const Vec3& u, std::vector<double> snapshot_times) {
    return std::make_shared<AnalyticFlow>([u](const Vec3&, double) { return u; }, std::move(snapshot_times));
}

Vec3 clamp_position(const Box& domain, const Vec3& position) { return domain.clamp(position); }

Vec3 quantize_position(const Vec3& position, int precision) {
    const double scale = std::pow(10.0, precision);
    Vec3 q;
    for (int a = 0; a < 3; ++a) q[a] = std::round(position[a] * scale) / scale;
    return q;
}

std::size_t FlowField::KeyHash::operator()(const Key& key) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double d : {key.t, key.x, key.y, key.z}) {
        h ^= std::bit_cast<std::uint64_t>(d + 0.0);  // +0.0 folds -0 onto +0
        h *= 0x100000001b3ull;
    }
    h ^= key.k;
    h *= 0x100000001b3ull;
    return std::size_t(h);
}

FlowField::FlowField(std::shared_ptr<store::BlockStore> store, FlowFieldConfig config)
    : store_(std::move(store)), config_(config) {
    if (!store_) throw Error("invalid_argument", "flow field needs a block store");
    if (config_.k == 0) throw Error("invalid_argument", "k must be at least 1");
    if (config_.query_cache_capacity == 0) throw Error("invalid_argument", "query cache capacity must be positive");
}

store::Index3 FlowField::valid_extent(const store::FieldBlock& block) const {
    const auto& g = store_->mesh().grid_dims;
    store::Index3 n;
    for (int a = 0; a < 3; ++a) n[a] = std::min(block.dims[a], g[a] - block.origin_index[a]);
    return n;
}

SpatialResult FlowField::spatial_interp_for_snapshot(const Vec3& position, std::size_t snapshot, std::size_t k) const {
    const auto& index = store_->index();
    const auto& layout = store_->layout();
    const auto neighbors = index.nearest_blocks(position, snapshot, k);

    SpatialResult out;
    double wsum = 0.0;
    Vec3 acc;
    VelocitySample single;
    for (const auto& nb : neighbors) {
        if (!layout.bounds(layout.key(nb.id)).contains(position)) continue;
        const auto block = store_->load_block(snapshot, nb.id);
        const TricubicResult r = tricubic_interp(*block, position, valid_extent(*block));
        const double wt = 1.0 / (nb.distance + 1e-12);
        acc += r.value.vec() * wt;
        wsum += wt;
        single = r.value;
        ++out.contributing;
        out.full_stencil = out.full_stencil && r.full_stencil;
    }
    // One containing block: its value as-is, not (v*w)/w.
    if (out.contributing == 1) {
        out.value = single;
        return out;
    }
    if (out.contributing > 1) {
        out.value = {acc.x / wsum, acc.y / wsum, acc.z / wsum};
        return out;
    }
    const auto nearest = store_->load_block(snapshot, neighbors.front().id);
    const TricubicResult r = tricubic_interp(*nearest, position, valid_extent(*nearest));
    out.value = r.value;
    out.extrapolated = !r.inside;
    out.full_stencil = r.full_stencil && r.inside;
    return out;
}

VelocityResult FlowField::compute(const Vec3& position, double t, std::size_t k) const {
    const auto& times = store_->mesh().snapshot_times;
    VelocityResult out;
    if (t <= times.front() || t >= times.back()) {
        const std::size_t snap = t <= times.front() ? 0 : times.size() - 1;
        const SpatialResult s = spatial_interp_for_snapshot(position, snap, k);
        out.value = s.value;
        out.extrapolated = s.extrapolated;
        out.full_stencil = s.full_stencil;
        return out;
    }
    const TemporalStencil st = make_temporal_stencil(times, t);
    std::array<VelocitySample, 4> samples;
    out.full_stencil = !st.clamped_left() && !st.clamped_right();
    for (int m = 0; m < 4; ++m) {
        const SpatialResult s = spatial_interp_for_snapshot(position, st.index[m], k);
        samples[m] = s.value;
        out.extrapolated = out.extrapolated || s.extrapolated;
        out.full_stencil = out.full_stencil && s.full_stencil;
    }
    out.value = cubic_temporal_interp(st, samples);
    return out;
}

VelocityResult FlowField::get_velocity(const Vec3& position, double t, std::size_t k) const {
    if (k == 0) k = config_.k;
    const Vec3 q = quantize_position(clamp(position), config_.precision);
    const Key key{t, q.x, q.y, q.z, k};
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            VelocityResult r = it->second;
            r.cached = true;
            return r;
        }
    }
    VelocityResult r;
    try {
        r = compute(q, t, k);
    } catch (const Error&) {
        std::lock_guard lock(mutex_);
        r.value = last_valid_;
        r.ok = false;
        return r;
    }
    if (!r.value.finite()) {
        std::lock_guard lock(mutex_);
        r.value = last_valid_;
        r.ok = false;
        return r;
    }
    std::lock_guard lock(mutex_);
    if (cache_.size() >= config_.query_cache_capacity) cache_.clear();
    cache_.emplace(key, r);
    last_valid_ = r.value;
    return r;
}

VelocitySample FlowField::trilinear_at_snapshot(const Vec3& position, std::size_t snapshot) const {
    const Vec3 p = clamp(position);
    const auto& layout = store_->layout();
    const auto neighbors = store_->index().nearest_blocks(p, snapshot, config_.k);
    for (const auto& nb : neighbors)
        if (layout.bounds(layout.key(nb.id)).contains(p))
            return trilinear_interp(*store_->load_block(snapshot, nb.id), p);
    return trilinear_interp(*store_->load_block(snapshot, neighbors.front().id), p);
}

FlowQuery FlowField::sample(const Vec3& p, double t) const {
    const VelocityResult r = get_velocity(p, t, config_.k);
    return {r.value.vec(), r.ok, r.extrapolated};
}

VelocitySample FlowField::last_valid_velocity() const {
    std::lock_guard lock(mutex_);
    return last_valid_;
}

std::size_t FlowField::query_cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

}  // namespace flownav::interp
