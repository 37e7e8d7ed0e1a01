#include "rlfuzz/eval/store.hpp"

#include <unistd.h>

#include <cstring>

#include "rlfuzz/crc32.hpp"

namespace rlfuzz::evalsvc {

namespace {
constexpr char kMagic[8] = {'R', 'L', 'F', 'Z', 'S', 'T', 'O', '1'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderSize = 16;
constexpr uint32_t kMaxRecordSize = 64u << 20;
}  // namespace

Bytes serialize_record(const ExperienceRecord& rec) {
    ByteWriter w;
    w.u64le(rec.episode_id);
    w.u32le(rec.sequence);
    w.str(rec.generator_checkpoint);
    w.u32le(uint32_t(rec.experience.action));
    w.f64le(rec.experience.reward);
    w.u8(rec.experience.terminal ? 1 : 0);
    w.u32le(uint32_t(rec.experience.state.size()));
    for (int id : rec.experience.state) w.u32le(uint32_t(id));
    w.u32le(uint32_t(rec.experience.next_state.size()));
    for (int id : rec.experience.next_state) w.u32le(uint32_t(id));
    return w.take();
}

ExperienceRecord deserialize_record(const Bytes& data) {
    ByteReader r(data);
    ExperienceRecord rec;
    rec.episode_id = r.u64le();
    rec.sequence = r.u32le();
    rec.generator_checkpoint = r.str();
    rec.experience.action = int(r.u32le());
    rec.experience.reward = r.f64le();
    rec.experience.terminal = r.u8() != 0;
    uint32_t n = r.u32le();
    rec.experience.state.resize(n);
    for (uint32_t i = 0; i < n; ++i) rec.experience.state[i] = int(r.u32le());
    n = r.u32le();
    rec.experience.next_state.resize(n);
    for (uint32_t i = 0; i < n; ++i) rec.experience.next_state[i] = int(r.u32le());
    if (r.remaining() != 0) throw StoreError("record has trailing bytes");
    return rec;
}

ExperienceStore ExperienceStore::create(const std::string& path, Options opts) {
    ExperienceStore s;
    s.path_ = path;
    s.opts_ = opts;
    std::FILE* f = std::fopen(path.c_str(), "w+b");
    if (!f) throw StoreError("cannot create store file: " + path);
    s.file_.reset(f);

    ByteWriter w;
    w.raw(kMagic, 8);
    w.u32le(kVersion);
    w.u32le(0);
    const Bytes& hdr = w.data();
    if (std::fwrite(hdr.data(), 1, hdr.size(), f) != hdr.size())
        throw StoreError("cannot write store header");
    std::fflush(f);
    return s;
}

ExperienceStore ExperienceStore::open(const std::string& path, Options opts) {
    ExperienceStore s;
    s.path_ = path;
    s.opts_ = opts;
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    if (!f) throw StoreError("cannot open store file: " + path);
    s.file_.reset(f);
    s.scan_and_index();
    return s;
}

ExperienceStore::~ExperienceStore() = default;

void ExperienceStore::scan_and_index() {
    std::FILE* f = file_.get();
    std::fseek(f, 0, SEEK_END);
    uint64_t file_size = uint64_t(std::ftell(f));
    std::fseek(f, 0, SEEK_SET);

    uint8_t hdr[kHeaderSize];
    if (file_size < kHeaderSize || std::fread(hdr, 1, kHeaderSize, f) != kHeaderSize)
        throw StoreError("store file too short for the header");
    if (std::memcmp(hdr, kMagic, 8) != 0) throw StoreError("not an experience store file");
    uint32_t version = 0;
    std::memcpy(&version, hdr + 8, 4);
    if (version != kVersion) throw StoreError("unsupported store version " + std::to_string(version));

    uint64_t off = kHeaderSize;
    offsets_.clear();
    while (off + 8 <= file_size) {
        std::fseek(f, long(off), SEEK_SET);
        uint8_t rec_hdr[8];
        if (std::fread(rec_hdr, 1, 8, f) != 8) break;
        uint32_t len = 0, crc = 0;
        std::memcpy(&len, rec_hdr, 4);
        std::memcpy(&crc, rec_hdr + 4, 4);
        if (len == 0 || len > kMaxRecordSize) break;
        if (off + 8 + len > file_size) break;  // torn tail
        Bytes payload(len);
        if (std::fread(payload.data(), 1, len, f) != len) break;
        if (crc32(payload.data(), payload.size()) != crc) break;  // corrupt record
        offsets_.push_back(off);
        off += 8 + len;
    }

    if (off != file_size) {
        // roll back the torn tail so later appends stay valid
        recovered_ = true;
        recovered_offset_ = off;
        if (::ftruncate(::fileno(f), long(off)) != 0)
            throw StoreError("cannot roll back torn tail in " + path_);
    }
    std::fseek(f, 0, SEEK_END);
}

void ExperienceStore::append(const ExperienceRecord& rec) {
    std::lock_guard<std::mutex> lk(*mutex_);
    std::FILE* f = file_.get();
    std::fseek(f, 0, SEEK_END);
    uint64_t off = uint64_t(std::ftell(f));

    Bytes payload = serialize_record(rec);
    uint32_t len = uint32_t(payload.size());
    uint32_t crc = crc32(payload.data(), payload.size());
    uint8_t rec_hdr[8];
    std::memcpy(rec_hdr, &len, 4);
    std::memcpy(rec_hdr + 4, &crc, 4);
    if (std::fwrite(rec_hdr, 1, 8, f) != 8 ||
        std::fwrite(payload.data(), 1, payload.size(), f) != payload.size())
        throw StoreError("store append failed: " + path_);
    if (std::fflush(f) != 0) throw StoreError("store flush failed: " + path_);
    if (opts_.fsync_each_append && ::fsync(::fileno(f)) != 0)
        throw StoreError("store fsync failed: " + path_);
    offsets_.push_back(off);
}

size_t ExperienceStore::count() const {
    std::lock_guard<std::mutex> lk(*mutex_);
    return offsets_.size();
}

ExperienceRecord ExperienceStore::read(size_t index) const {
    std::lock_guard<std::mutex> lk(*mutex_);
    if (index >= offsets_.size()) throw StoreError("store read: index out of range");
    std::FILE* f = file_.get();
    std::fseek(f, long(offsets_[index]), SEEK_SET);
    uint8_t rec_hdr[8];
    if (std::fread(rec_hdr, 1, 8, f) != 8) throw StoreError("store read: header read failed");
    uint32_t len = 0, crc = 0;
    std::memcpy(&len, rec_hdr, 4);
    std::memcpy(&crc, rec_hdr + 4, 4);
    Bytes payload(len);
    if (std::fread(payload.data(), 1, len, f) != len) throw StoreError("store read: payload read failed");
    if (crc32(payload.data(), payload.size()) != crc)
        throw StoreError("store read: CRC mismatch at offset " + std::to_string(offsets_[index]));
    std::fseek(f, 0, SEEK_END);
    return deserialize_record(payload);
}

std::vector<ExperienceRecord> ExperienceStore::stream(size_t from_sequence,
                                                      size_t max_count) const {
    std::vector<ExperienceRecord> out;
    size_t n;
    {
        std::lock_guard<std::mutex> lk(*mutex_);
        n = offsets_.size();
    }
    for (size_t i = from_sequence; i < n && out.size() < max_count; ++i) out.push_back(read(i));
    return out;
}

}  // namespace rlfuzz::evalsvc
