#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "uhddip/tensor.hpp"

namespace uhddip {
namespace io {

// Flat binary tensor record: 8-byte magic, u32 rank, u64 extents,
// little-endian f32 payload. Used for checkpoints and golden files.

inline constexpr char kTensorMagic[8] = {'U', 'H', 'D', 'T', 'E', 'N', 'S', '1'};

inline void write_tensor_record(std::ostream& os, const Tensor<float>& t) {
    os.write(kTensorMagic, 8);
    const uint32_t rank = static_cast<uint32_t>(t.rank());
    os.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (int i = 0; i < t.rank(); ++i) {
        const uint64_t d = static_cast<uint64_t>(t.dim(i));
        os.write(reinterpret_cast<const char*>(&d), sizeof(d));
    }
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

inline Tensor<float> read_tensor_record(std::istream& is, const std::string& what) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kTensorMagic, 8) != 0)
        throw IngestError(what + ": bad tensor magic");
    uint32_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), sizeof(rank));
    if (!is || rank > 8) throw IngestError(what + ": bad tensor rank");
    Shape shape(rank);
    for (uint32_t i = 0; i < rank; ++i) {
        uint64_t d = 0;
        is.read(reinterpret_cast<char*>(&d), sizeof(d));
        shape[i] = static_cast<int64_t>(d);
    }
    if (!is) throw IngestError(what + ": truncated tensor header");
    Tensor<float> t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!is) throw IngestError(what + ": truncated tensor payload");
    return t;
}

inline void save_tensor(const std::string& path, const Tensor<float>& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IngestError("save_tensor: cannot open " + path);
    write_tensor_record(os, t);
}

inline Tensor<float> load_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IngestError("load_tensor: cannot open " + path);
    return read_tensor_record(is, path);
}

}  // namespace io
}  // namespace uhddip
