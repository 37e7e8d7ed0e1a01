#include "rlfuzz/coverage.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rlfuzz::cov {

CoverageSet coverage_union(const std::vector<CoverageSet>& sets) {
    CoverageSet out;
    for (const auto& s : sets) out.insert(s.begin(), s.end());
    return out;
}

CoverageSet coverage_unique(const CoverageSet& candidate, const CoverageSet& baseline) {
    CoverageSet out;
    for (const auto& b : candidate)
        if (!baseline.count(b)) out.insert(b);
    return out;
}

std::string coverage_to_text(const CoverageSet& s) {
    std::string out;
    char buf[32];
    for (const auto& b : s) {
        std::snprintf(buf, sizeof buf, "%x:%x\n", unsigned(b.module_id), unsigned(b.offset));
        out += buf;
    }
    return out;
}

CoverageSet coverage_from_text(const std::string& text) {
    CoverageSet out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        unsigned mod = 0, off = 0;
        if (std::sscanf(line.c_str(), "%x:%x", &mod, &off) != 2)
            throw std::runtime_error("coverage file line " + std::to_string(lineno) + ": bad entry: " + line);
        out.insert(BasicBlockId{uint16_t(mod), uint32_t(off)});
    }
    return out;
}

void coverage_save(const CoverageSet& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write coverage file: " + path);
    f << coverage_to_text(s);
}

CoverageSet coverage_load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open coverage file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return coverage_from_text(ss.str());
}

}  // namespace rlfuzz::cov
