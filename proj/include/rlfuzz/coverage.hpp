#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace rlfuzz::cov {

// A basic block, identified by its start offset within a module.
struct BasicBlockId {
    uint16_t module_id = 0;
    uint32_t offset = 0;

    friend auto operator<=>(const BasicBlockId&, const BasicBlockId&) = default;
};

using CoverageSet = std::set<BasicBlockId>;

CoverageSet coverage_union(const std::vector<CoverageSet>& sets);

// blocks in candidate that the baseline never reached
CoverageSet coverage_unique(const CoverageSet& candidate, const CoverageSet& baseline);

// persisted as sorted "mod_id:offset" hex lines
std::string coverage_to_text(const CoverageSet& s);
CoverageSet coverage_from_text(const std::string& text);
void coverage_save(const CoverageSet& s, const std::string& path);
CoverageSet coverage_load(const std::string& path);

}  // namespace rlfuzz::cov
