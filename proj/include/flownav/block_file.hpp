#pragma once

#include "flownav/mesh_meta.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flownav::store {

/// Position of a block in the block lattice (not a grid index).
struct BlockKey {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;

    friend auto operator<=>(const BlockKey&, const BlockKey&) = default;
};

/// One snapshot sub-volume as stored on disk. Arrays are x-fastest, then y, then z.
struct FieldBlock {
    Index3 dims{0, 0, 0};
    Index3 origin_index{0, 0, 0};
    Vec3 phys_min;
    Vec3 spacing;
    std::vector<float> u, v, w;

    std::size_t point_count() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const {
        return i + dims[0] * (j + dims[1] * k);
    }
    Vec3 phys_max() const {
        return {phys_min.x + spacing.x * double(dims[0] - 1), phys_min.y + spacing.y * double(dims[1] - 1),
                phys_min.z + spacing.z * double(dims[2] - 1)};
    }
    Box bounds() const { return {phys_min, phys_max()}; }
    Vec3 center() const { return bounds().center(); }

    friend bool operator==(const FieldBlock&, const FieldBlock&) = default;
};

inline constexpr char kBlockMagic[4] = {'U', 'F', 'B', '1'};
inline constexpr std::size_t kBlockHeaderBytes = 4 + 6 * 4 + 6 * 8;

/// `t{T:05}_i{I:04}_j{J:04}_k{K:04}.ufb`
std::string block_file_name(std::size_t snapshot, const BlockKey& key);

/// Parses a block file name; returns false if it does not follow the naming scheme.
bool parse_block_file_name(const std::string& name, std::size_t& snapshot, BlockKey& key);

std::vector<std::uint8_t> encode_block(const FieldBlock& block);
FieldBlock decode_block(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

void write_block_file(const std::filesystem::path& path, const FieldBlock& block);
FieldBlock read_block_file(const std::filesystem::path& path);

}  // namespace flownav::store
