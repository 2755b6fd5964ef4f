#include "flownav/block_store.hpp"

#include "flownav/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;

namespace flownav::store {

std::vector<std::size_t> block_starts(std::size_t grid_points, std::size_t block_size, std::size_t stride) {
    if (block_size == 0 || stride == 0) throw Error("invalid_mesh", "block size and stride must be positive");
    std::vector<std::size_t> starts;
    for (std::size_t s = 0;; s += stride) {
        starts.push_back(s);
        if (s + block_size >= grid_points) break;
    }
    return starts;
}

BlockLayout::BlockLayout(const MeshMeta& mesh) : mesh_(mesh) {
    mesh_.validate();
    for (int a = 0; a < 3; ++a) {
        starts_[a] = block_starts(mesh_.grid_dims[a], mesh_.block_size[a], mesh_.block_stride[a]);
        counts_[a] = starts_[a].size();
    }
}

BlockKey BlockLayout::key(std::size_t id) const {
    BlockKey k;
    k.i = std::uint32_t(id % counts_[0]);
    k.j = std::uint32_t((id / counts_[0]) % counts_[1]);
    k.k = std::uint32_t(id / (counts_[0] * counts_[1]));
    return k;
}

Index3 BlockLayout::origin_index(const BlockKey& key) const {
    return {starts_[0].at(key.i), starts_[1].at(key.j), starts_[2].at(key.k)};
}

Box BlockLayout::bounds(const BlockKey& key) const {
    const Index3 o = origin_index(key);
    const Vec3 h = mesh_.spacing();
    Box b;
    for (int a = 0; a < 3; ++a) {
        b.min[a] = mesh_.domain_min[a] + double(o[a]) * h[a];
        b.max[a] = b.min[a] + double(mesh_.block_size[a] - 1) * h[a];
    }
    return b;
}

bool BlockLayout::covers_all_cells() const {
    for (int a = 0; a < 3; ++a) {
        const std::size_t n = mesh_.grid_dims[a];
        const std::size_t size = mesh_.block_size[a];
        for (std::size_t c = 0; c + 1 < n; ++c) {
            const bool covered = std::any_of(starts_[a].begin(), starts_[a].end(),
                                             [&](std::size_t s) { return s <= c && c + 1 <= s + size - 1; });
            if (!covered) return false;
        }
    }
    return true;
}

FieldBlock extract_block(const MeshMeta& mesh, const BlockLayout& layout, const GridSnapshot& snap,
                         const BlockKey& key) {
    FieldBlock b;
    b.dims = mesh.block_size;
    b.origin_index = layout.origin_index(key);
    b.spacing = mesh.spacing();
    for (int a = 0; a < 3; ++a) b.phys_min[a] = mesh.domain_min[a] + double(b.origin_index[a]) * b.spacing[a];
    const std::size_t n = b.point_count();
    b.u.resize(n);
    b.v.resize(n);
    b.w.resize(n);
    const auto& g = mesh.grid_dims;
    for (std::size_t k = 0; k < b.dims[2]; ++k) {
        const std::size_t gk = std::min(b.origin_index[2] + k, g[2] - 1);
        for (std::size_t j = 0; j < b.dims[1]; ++j) {
            const std::size_t gj = std::min(b.origin_index[1] + j, g[1] - 1);
            for (std::size_t i = 0; i < b.dims[0]; ++i) {
                const std::size_t gi = std::min(b.origin_index[0] + i, g[0] - 1);
                const std::size_t src = gi + g[0] * (gj + g[1] * gk);
                const std::size_t dst = b.linear(i, j, k);
                b.u[dst] = snap.u[src];
                b.v[dst] = snap.v[src];
                b.w[dst] = snap.w[src];
            }
        }
    }
    return b;
}

void ingest(const SnapshotSource& source, const MeshMeta& mesh, const fs::path& out_dir) {
    mesh.validate();
    const BlockLayout layout(mesh);
    if (!layout.covers_all_cells())
        throw Error("coverage", "block size/stride leave grid cells uncovered (stride must be < block size)");

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) throw Error("io_error", "cannot create output directory " + out_dir.string());

    const std::size_t n = mesh.point_count();
    for (std::size_t t = 0; t < mesh.snapshot_count(); ++t) {
        const GridSnapshot snap = source(t);
        if (snap.u.size() != n || snap.v.size() != n || snap.w.size() != n)
            throw Error("dimension_mismatch", "snapshot " + std::to_string(t) + " does not match grid_dims");
        for (const auto* comp : {&snap.u, &snap.v, &snap.w})
            for (float f : *comp)
                if (!std::isfinite(f))
                    throw Error("non_finite", "snapshot " + std::to_string(t) + " contains non-finite values");
        for (std::size_t id = 0; id < layout.block_count(); ++id) {
            const BlockKey key = layout.key(id);
            write_block_file(out_dir / block_file_name(t, key), extract_block(mesh, layout, snap, key));
        }
    }
    write_mesh_json(out_dir / "mesh.json", mesh);
}

std::string raw_snapshot_name(std::size_t snapshot) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snapshot_%05zu.raw", snapshot);
    return buf;
}

void write_raw_snapshot(const fs::path& path, const GridSnapshot& snap) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    static_assert(std::endian::native == std::endian::little, "raw snapshot IO assumes a little-endian host");
    for (const auto* comp : {&snap.u, &snap.v, &snap.w})
        out.write(reinterpret_cast<const char*>(comp->data()), std::streamsize(comp->size() * sizeof(float)));
    if (!out) throw Error("io_error", "write failed for " + path.string());
}

SnapshotSource raw_directory_source(const MeshMeta& mesh, const fs::path& raw_dir) {
    const std::size_t n = mesh.point_count();
    return [n, raw_dir](std::size_t t) {
        const fs::path path = raw_dir / raw_snapshot_name(t);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("missing_dataset", "cannot open " + path.string());
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() != 3 * n * sizeof(float))
            throw Error("dimension_mismatch", path.string() + " does not hold 3 x grid_dims float32 values");
        GridSnapshot s;
        std::size_t off = 0;
        for (auto* comp : {&s.u, &s.v, &s.w}) {
            comp->resize(n);
            std::memcpy(comp->data(), bytes.data() + off, n * sizeof(float));
            off += n * sizeof(float);
        }
        return s;
    };
}

BlockIndex::BlockIndex(const MeshMeta& mesh, const fs::path& dir) : mesh_(mesh), layout_(mesh), dir_(dir) {
    const std::size_t nblocks = layout_.block_count();
    const std::size_t nsnap = mesh_.snapshot_count();
    std::vector<bool> seen(nblocks * nsnap, false);
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir_, ec)) {
        std::size_t t = 0;
        BlockKey key;
        if (!parse_block_file_name(entry.path().filename().string(), t, key)) continue;
        if (t >= nsnap || key.i >= layout_.counts()[0] || key.j >= layout_.counts()[1] || key.k >= layout_.counts()[2])
            continue;
        seen[t * nblocks + layout_.linear_id(key)] = true;
    }
    if (ec) throw Error("missing_dataset", "cannot scan " + dir_.string());
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw Error("missing_block", "block file missing: " + block_file_name(i / nblocks, layout_.key(i % nblocks)));

    std::vector<Vec3> centers(nblocks);
    for (std::size_t id = 0; id < nblocks; ++id) centers[id] = layout_.center(layout_.key(id));
    tree_ = KdTree(std::move(centers));
}

std::vector<Neighbor> BlockIndex::nearest_blocks(const Vec3& position, std::size_t snapshot, std::size_t k) const {
    if (tree_.empty()) throw Error("empty_index", "block index holds no blocks");
    if (snapshot >= snapshot_count()) throw Error("invalid_snapshot", "snapshot index out of range");
    if (k == 0) throw Error("invalid_argument", "k must be at least 1");
    return tree_.nearest(position, k);
}

fs::path BlockIndex::file(std::size_t snapshot, const BlockKey& key) const {
    return dir_ / block_file_name(snapshot, key);
}

BlockCache::BlockCache(std::size_t capacity, Loader loader) : capacity_(capacity), loader_(std::move(loader)) {
    if (capacity_ == 0) throw Error("invalid_argument", "cache capacity must be positive");
}

std::shared_ptr<const FieldBlock> BlockCache::get(std::size_t snapshot, std::size_t block_id) {
    const Key key = make_key(snapshot, block_id);
    std::lock_guard lock(mutex_);
    if (auto it = map_.find(key); it != map_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        ++stats_.hits;
        return it->second->block;
    }
    auto block = std::make_shared<const FieldBlock>(loader_(snapshot, block_id));
    ++stats_.misses;
    ++stats_.disk_reads;
    if (lru_.size() >= capacity_) {
        map_.erase(lru_.back().key);
        lru_.pop_back();
    }
    lru_.push_front({key, block});
    map_[key] = lru_.begin();
    return block;
}

CacheStats BlockCache::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

std::size_t BlockCache::size() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
}

bool BlockCache::contains(std::size_t snapshot, std::size_t block_id) const {
    std::lock_guard lock(mutex_);
    return map_.count(make_key(snapshot, block_id)) != 0;
}

BlockStore::BlockStore(const fs::path& dir, std::size_t cache_capacity)
    : dir_(dir),
      index_(read_mesh_json(dir / "mesh.json"), dir),
      cache_(cache_capacity, [this](std::size_t t, std::size_t id) {
          return read_block_file(index_.file(t, index_.layout().key(id)));
      }) {}

std::shared_ptr<const FieldBlock> BlockStore::load_block(std::size_t snapshot, const BlockKey& key) {
    return load_block(snapshot, layout().linear_id(key));
}

std::shared_ptr<const FieldBlock> BlockStore::load_block(std::size_t snapshot, std::size_t block_id) {
    if (snapshot >= mesh().snapshot_count()) throw Error("invalid_snapshot", "snapshot index out of range");
    if (block_id >= layout().block_count()) throw Error("invalid_block", "block id out of range");
    return cache_.get(snapshot, block_id);
}

GridSnapshot BlockStore::assemble(std::size_t snapshot) {
    const auto& g = mesh().grid_dims;
    GridSnapshot s;
    s.u.assign(mesh().point_count(), 0.0f);
    s.v = s.u;
    s.w = s.u;
    for (std::size_t id = 0; id < layout().block_count(); ++id) {
        const auto b = load_block(snapshot, id);
        for (std::size_t k = 0; k < b->dims[2] && b->origin_index[2] + k < g[2]; ++k)
            for (std::size_t j = 0; j < b->dims[1] && b->origin_index[1] + j < g[1]; ++j)
                for (std::size_t i = 0; i < b->dims[0] && b->origin_index[0] + i < g[0]; ++i) {
                    const std::size_t dst = (b->origin_index[0] + i) +
                                            g[0] * ((b->origin_index[1] + j) + g[1] * (b->origin_index[2] + k));
                    const std::size_t src = b->linear(i, j, k);
                    s.u[dst] = b->u[src];
                    s.v[dst] = b->v[src];
                    s.w[dst] = b->w[src];
                }
    }
    return s;
}

}  // namespace flownav::store
