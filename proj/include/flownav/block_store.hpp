#pragma once

#include "flownav/block_file.hpp"
#include "flownav/kdtree.hpp"
#include "flownav/mesh_meta.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace flownav::store {

/// Start indices of the blocks along one axis. Blocks start every `stride` points until one
/// reaches the last grid point; the final block may run past the grid (padded at ingest).
std::vector<std::size_t> block_starts(std::size_t grid_points, std::size_t block_size, std::size_t stride);

/// Time-invariant block decomposition of a mesh.
class BlockLayout {
public:
    explicit BlockLayout(const MeshMeta& mesh);

    const Index3& counts() const { return counts_; }
    std::size_t block_count() const { return counts_[0] * counts_[1] * counts_[2]; }
    std::size_t linear_id(const BlockKey& key) const { return key.i + counts_[0] * (key.j + counts_[1] * key.k); }
    BlockKey key(std::size_t linear_id) const;
    Index3 origin_index(const BlockKey& key) const;
    Box bounds(const BlockKey& key) const;
    Vec3 center(const BlockKey& key) const { return bounds(key).center(); }

    /// Every grid cell (i..i+1 on each axis) lies inside at least one block.
    bool covers_all_cells() const;

private:
    MeshMeta mesh_;
    std::array<std::vector<std::size_t>, 3> starts_;
    Index3 counts_{0, 0, 0};
};

/// One full-grid snapshot, x-index fastest.
struct GridSnapshot {
    std::vector<float> u, v, w;
};

/// Supplies snapshot `index` (0-based, matching MeshMeta::snapshot_times).
using SnapshotSource = std::function<GridSnapshot(std::size_t index)>;

/// Cut one snapshot into blocks, replicating edge values for blocks that run past the grid.
FieldBlock extract_block(const MeshMeta& mesh, const BlockLayout& layout, const GridSnapshot& snap,
                         const BlockKey& key);

/// Writes every (snapshot, block) file plus mesh.json into `out_dir`.
void ingest(const SnapshotSource& source, const MeshMeta& mesh, const std::filesystem::path& out_dir);

/// Reads `snapshot_{T:05}.raw` files (little-endian f32 u, v, w over the full grid).
SnapshotSource raw_directory_source(const MeshMeta& mesh, const std::filesystem::path& raw_dir);
void write_raw_snapshot(const std::filesystem::path& path, const GridSnapshot& snap);
std::string raw_snapshot_name(std::size_t snapshot);

/// Spatial index over block centers plus the (snapshot, block) -> file map.
class BlockIndex {
public:
    BlockIndex(const MeshMeta& mesh, const std::filesystem::path& dir);

    const MeshMeta& mesh() const { return mesh_; }
    const BlockLayout& layout() const { return layout_; }
    std::size_t snapshot_count() const { return mesh_.snapshot_count(); }

    /// k nearest block centers, ascending distance, ties by linear block id.
    std::vector<Neighbor> nearest_blocks(const Vec3& position, std::size_t snapshot, std::size_t k) const;

    std::filesystem::path file(std::size_t snapshot, const BlockKey& key) const;

private:
    MeshMeta mesh_;
    BlockLayout layout_;
    std::filesystem::path dir_;
    KdTree tree_;
};

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t disk_reads = 0;
};

/// Thread-safe LRU cache of decoded blocks keyed by (snapshot, linear block id).
class BlockCache {
public:
    using Loader = std::function<FieldBlock(std::size_t snapshot, std::size_t block_id)>;

    BlockCache(std::size_t capacity, Loader loader);

    std::shared_ptr<const FieldBlock> get(std::size_t snapshot, std::size_t block_id);

    CacheStats stats() const;
    std::size_t size() const;
    std::size_t capacity() const { return capacity_; }
    bool contains(std::size_t snapshot, std::size_t block_id) const;

private:
    using Key = std::uint64_t;
    struct Entry {
        Key key;
        std::shared_ptr<const FieldBlock> block;
    };

    static Key make_key(std::size_t snapshot, std::size_t block_id) {
        return (std::uint64_t(snapshot) << 32) | std::uint64_t(block_id);
    }

    std::size_t capacity_;
    Loader loader_;
    mutable std::mutex mutex_;
    std::list<Entry> lru_;
    std::unordered_map<Key, std::list<Entry>::iterator> map_;
    CacheStats stats_;
};

/// A block-decomposed dataset opened for reading.
class BlockStore {
public:
    explicit BlockStore(const std::filesystem::path& dir, std::size_t cache_capacity = 512);

    const MeshMeta& mesh() const { return index_.mesh(); }
    const BlockIndex& index() const { return index_; }
    const BlockLayout& layout() const { return index_.layout(); }
    const std::filesystem::path& directory() const { return dir_; }

    std::shared_ptr<const FieldBlock> load_block(std::size_t snapshot, const BlockKey& key);
    std::shared_ptr<const FieldBlock> load_block(std::size_t snapshot, std::size_t block_id);
    BlockCache& cache() { return cache_; }
    const BlockCache& cache() const { return cache_; }

    /// Rebuilds a full-grid snapshot from its blocks.
    GridSnapshot assemble(std::size_t snapshot);

private:
    std::filesystem::path dir_;
    BlockIndex index_;
    BlockCache cache_;
};

}  // namespace flownav::store
