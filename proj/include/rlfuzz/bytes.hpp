#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlfuzz {

using Bytes = std::vector<uint8_t>;

// Little-endian byte writer/reader used by the checkpoint container and the
// experience store. The network protocol uses the big-endian variants.
class ByteWriter {
public:
    Bytes take() { return std::move(buf_); }
    const Bytes& data() const { return buf_; }
    size_t size() const { return buf_.size(); }

    void raw(const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16le(uint16_t v) { for (int i = 0; i < 2; ++i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void u32le(uint32_t v) { for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void u64le(uint64_t v) { for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void u16be(uint16_t v) { for (int i = 1; i >= 0; --i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void u32be(uint32_t v) { for (int i = 3; i >= 0; --i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void u64be(uint64_t v) { for (int i = 7; i >= 0; --i) buf_.push_back(uint8_t(v >> (8 * i))); }
    void f64le(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64le(bits);
    }
    void str(const std::string& s) {  // u32le length prefix
        u32le(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

private:
    Bytes buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
    explicit ByteReader(const Bytes& b) : p_(b.data()), n_(b.size()) {}

    size_t offset() const { return off_; }
    size_t remaining() const { return n_ - off_; }
    bool eof() const { return off_ >= n_; }

    void raw(void* out, size_t n) {
        need(n);
        std::memcpy(out, p_ + off_, n);
        off_ += n;
    }
    uint8_t u8() { need(1); return p_[off_++]; }
    uint16_t u16le() { return static_cast<uint16_t>(le(2)); }
    uint32_t u32le() { return static_cast<uint32_t>(le(4)); }
    uint64_t u64le() { return le(8); }
    uint16_t u16be() { return static_cast<uint16_t>(be(2)); }
    uint32_t u32be() { return static_cast<uint32_t>(be(4)); }
    uint64_t u64be() { return be(8); }
    double f64le() {
        uint64_t bits = u64le();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        uint32_t n = u32le();
        need(n);
        std::string s(reinterpret_cast<const char*>(p_ + off_), n);
        off_ += n;
        return s;
    }

private:
    void need(size_t n) {
        if (n_ - off_ < n) throw std::out_of_range("byte reader: truncated input at offset " + std::to_string(off_));
    }
    uint64_t le(int n) {
        need(size_t(n));
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= uint64_t(p_[off_ + size_t(i)]) << (8 * i);
        off_ += size_t(n);
        return v;
    }
    uint64_t be(int n) {
        need(size_t(n));
        uint64_t v = 0;
        for (int i = 0; i < n; ++i) v = (v << 8) | p_[off_ + size_t(i)];
        off_ += size_t(n);
        return v;
    }

    const uint8_t* p_;
    size_t n_;
    size_t off_ = 0;
};

inline Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

}  // namespace rlfuzz
