#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlfuzz/bytes.hpp"
#include "rlfuzz/coverage.hpp"

namespace rlfuzz::cov {

struct DrcovModule {
    uint16_t id = 0;
    uint64_t base = 0;
    uint64_t end = 0;
    std::string path;
};

struct DrcovData {
    std::vector<DrcovModule> modules;
    CoverageSet blocks;  // one entry per distinct (module, start offset)
    size_t record_count = 0;  // records in the BB table, duplicates included
};

struct DrcovParseError : std::runtime_error {
    size_t byte_offset;
    DrcovParseError(const std::string& what, size_t off)
        : std::runtime_error(what + " (at byte offset " + std::to_string(off) + ")"),
          byte_offset(off) {}
};

// Parses a DrCov version-2 log: text header ("DRCOV VERSION: 2", flavor,
// module table, "BB Table: N bbs") followed by N binary records of
// {start: u32, size: u16, mod_id: u16}, little-endian.
DrcovData parse_drcov(const Bytes& log);

// Emits a minimal well-formed version-2 log for the given blocks.
Bytes emit_drcov(const CoverageSet& blocks, const std::vector<DrcovModule>& modules);

// Restrict to modules whose path contains the given substring
// (mirrors collecting coverage for one library of interest only).
CoverageSet filter_by_module(const DrcovData& data, const std::string& path_substring);

}  // namespace rlfuzz::cov
