#include "rlfuzz/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace rlfuzz::nn {

namespace {
constexpr char kMagic[8] = {'R', 'L', 'F', 'Z', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

Bytes Checkpoint::serialize() const {
    ByteWriter w;
    w.raw(kMagic, 8);
    w.u32le(kVersion);
    w.str(kind);
    w.u32le(uint32_t(meta.size()));
    for (const auto& [k, v] : meta) {
        w.str(k);
        w.str(v);
    }
    w.u32le(uint32_t(arrays.size()));
    for (const auto& a : arrays) {
        w.str(a.name);
        w.u32le(uint32_t(a.shape.size()));
        for (int d : a.shape) w.u32le(uint32_t(d));
        w.u64le(a.data.size());
        for (double x : a.data) w.f64le(x);
    }
    return w.take();
}

Checkpoint Checkpoint::deserialize(const Bytes& data) {
    ByteReader r(data);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw CheckpointError("not a checkpoint file");
    uint32_t version = r.u32le();
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint c;
    c.kind = r.str();
    uint32_t n_meta = r.u32le();
    for (uint32_t i = 0; i < n_meta; ++i) {
        std::string k = r.str();
        c.meta[k] = r.str();
    }
    uint32_t n_arrays = r.u32le();
    for (uint32_t i = 0; i < n_arrays; ++i) {
        Array a;
        a.name = r.str();
        uint32_t nd = r.u32le();
        for (uint32_t j = 0; j < nd; ++j) a.shape.push_back(int(r.u32le()));
        uint64_t n = r.u64le();
        a.data.resize(n);
        for (uint64_t j = 0; j < n; ++j) a.data[j] = r.f64le();
        c.arrays.push_back(std::move(a));
    }
    return c;
}

void Checkpoint::save(const std::string& path) const {
    Bytes data = serialize();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot write checkpoint: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(data);
}

void Checkpoint::put_params(const ParamSet& params) {
    for (const Param* p : params.params()) {
        Array a;
        a.name = p->name;
        a.shape = p->shape;
        a.data = p->w;
        arrays.push_back(std::move(a));
    }
}

void Checkpoint::restore_params(ParamSet& params) const {
    for (Param* p : params.params()) {
        const Array* found = nullptr;
        for (const auto& a : arrays)
            if (a.name == p->name) {
                found = &a;
                break;
            }
        if (!found) throw CheckpointError("checkpoint missing parameter array: " + p->name);
        if (found->data.size() != p->w.size())
            throw CheckpointError("checkpoint parameter size mismatch: " + p->name);
        p->w = found->data;
    }
}

}  // namespace rlfuzz::nn
