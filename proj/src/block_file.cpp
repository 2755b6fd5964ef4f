#include "flownav/block_file.hpp"

#include "flownav/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace flownav::store {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
}

}  // namespace

std::string block_file_name(std::size_t snapshot, const BlockKey& key) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "t%05zu_i%04u_j%04u_k%04u.ufb", snapshot, key.i, key.j, key.k);
    return buf;
}

bool parse_block_file_name(const std::string& name, std::size_t& snapshot, BlockKey& key) {
    unsigned long t = 0;
    unsigned i = 0, j = 0, k = 0;
    int consumed = 0;
    if (std::sscanf(name.c_str(), "t%5lu_i%4u_j%4u_k%4u.ufb%n", &t, &i, &j, &k, &consumed) != 4)
        return false;
    if (consumed != int(name.size())) return false;
    if (name != block_file_name(t, {i, j, k})) return false;
    snapshot = t;
    key = {i, j, k};
    return true;
}

std::vector<std::uint8_t> encode_block(const FieldBlock& b) {
    const std::size_t n = b.point_count();
    if (b.u.size() != n || b.v.size() != n || b.w.size() != n)
        throw Error("invalid_block", "component arrays do not match block dimensions");
    std::vector<std::uint8_t> out;
    out.reserve(kBlockHeaderBytes + 12 * n);
    out.insert(out.end(), kBlockMagic, kBlockMagic + 4);
    for (auto d : b.dims) put_le<std::uint32_t>(out, std::uint32_t(d));
    for (auto o : b.origin_index) put_le<std::uint32_t>(out, std::uint32_t(o));
    for (int a = 0; a < 3; ++a) put_le<double>(out, b.phys_min[a]);
    for (int a = 0; a < 3; ++a) put_le<double>(out, b.spacing[a]);
    for (const auto* comp : {&b.u, &b.v, &b.w})
        for (float f : *comp) put_le<float>(out, f);
    return out;
}

FieldBlock decode_block(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < kBlockHeaderBytes) throw Error("corrupt_block", origin + ": truncated header");
    if (std::memcmp(bytes.data(), kBlockMagic, 4) != 0) throw Error("corrupt_block", origin + ": bad magic");
    FieldBlock b;
    const std::uint8_t* p = bytes.data() + 4;
    for (auto& d : b.dims) { d = get_le<std::uint32_t>(p); p += 4; }
    for (auto& o : b.origin_index) { o = get_le<std::uint32_t>(p); p += 4; }
    for (int a = 0; a < 3; ++a) { b.phys_min[a] = get_le<double>(p); p += 8; }
    for (int a = 0; a < 3; ++a) { b.spacing[a] = get_le<double>(p); p += 8; }
    const std::size_t n = b.point_count();
    if (n == 0 || bytes.size() != kBlockHeaderBytes + 12 * n)
        throw Error("corrupt_block", origin + ": payload length does not match header dimensions");
    for (auto* comp : {&b.u, &b.v, &b.w}) {
        comp->resize(n);
        for (std::size_t i = 0; i < n; ++i, p += 4) (*comp)[i] = get_le<float>(p);
    }
    return b;
}

void write_block_file(const std::filesystem::path& path, const FieldBlock& block) {
    const auto bytes = encode_block(block);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw Error("io_error", "write failed for " + path.string());
}

FieldBlock read_block_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing_block", "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_block(bytes, path.string());
}

}  // namespace flownav::store
