#pragma once

#include <cstdint>
#include <cstddef>

namespace rlfuzz {

// CRC-32 (IEEE 802.3, polynomial 0xEDB88320), table-driven.
inline uint32_t crc32(const void* data, size_t len, uint32_t seed = 0) {
    static const auto table = [] {
        struct Table { uint32_t t[256]; } tbl{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            tbl.t[i] = c;
        }
        return tbl;
    }();
    uint32_t c = seed ^ 0xFFFFFFFFu;
    const uint8_t* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < len; ++i) c = table.t[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

}  // namespace rlfuzz
