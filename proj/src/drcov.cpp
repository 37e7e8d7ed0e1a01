#include "rlfuzz/drcov.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <map>

namespace rlfuzz::cov {

namespace {

struct LineScanner {
    const Bytes& log;
    size_t off = 0;

    // returns the next line without the terminator; throws on missing newline
    std::string next_line(const char* what) {
        if (off >= log.size()) throw DrcovParseError(std::string("unexpected end of log, expected ") + what, off);
        size_t nl = off;
        while (nl < log.size() && log[nl] != '\n') ++nl;
        if (nl == log.size()) throw DrcovParseError(std::string("unterminated header line, expected ") + what, off);
        std::string line(reinterpret_cast<const char*>(log.data() + off), nl - off);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        off = nl + 1;
        return line;
    }
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

uint64_t parse_u64(const std::string& s, size_t err_off, const char* what) {
    try {
        size_t pos = 0;
        uint64_t v = std::stoull(s, &pos, 0);  // accepts decimal and 0x-hex
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DrcovParseError(std::string("malformed ") + what + ": '" + s + "'", err_off);
    }
}

}  // namespace

DrcovData parse_drcov(const Bytes& log) {
    LineScanner sc{log};

    size_t line_off = sc.off;
    std::string line = sc.next_line("DRCOV VERSION");
    if (line != "DRCOV VERSION: 2")
        throw DrcovParseError("unsupported or malformed version line: '" + line + "'", line_off);

    line_off = sc.off;
    line = sc.next_line("DRCOV FLAVOR");
    if (line.rfind("DRCOV FLAVOR:", 0) != 0)
        throw DrcovParseError("missing flavor line: '" + line + "'", line_off);

    line_off = sc.off;
    line = sc.next_line("Module Table");
    if (line.rfind("Module Table:", 0) != 0)
        throw DrcovParseError("missing module table line: '" + line + "'", line_off);

    // "Module Table: version 2, count N" or legacy "Module Table: N"
    size_t module_count = 0;
    {
        std::string rest = trim(line.substr(strlen("Module Table:")));
        size_t cpos = rest.find("count");
        if (cpos != std::string::npos) {
            module_count = parse_u64(trim(rest.substr(cpos + 5)), line_off, "module count");
        } else {
            module_count = parse_u64(rest, line_off, "module count");
        }
    }

    DrcovData data;
    std::map<uint16_t, size_t> module_index;
    bool columns_seen = false;
    for (size_t i = 0; i < module_count; ++i) {
        line_off = sc.off;
        line = sc.next_line("module table entry");
        if (!columns_seen && line.rfind("Columns:", 0) == 0) {
            columns_seen = true;
            --i;
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() < 4)
            throw DrcovParseError("module table entry needs id, base, end, path: '" + line + "'", line_off);
        DrcovModule m;
        m.id = static_cast<uint16_t>(parse_u64(fields[0], line_off, "module id"));
        m.base = parse_u64(fields[1], line_off, "module base");
        m.end = parse_u64(fields[2], line_off, "module end");
        m.path = fields.back();
        if (module_index.count(m.id))
            throw DrcovParseError("duplicate module id " + std::to_string(m.id), line_off);
        module_index[m.id] = data.modules.size();
        data.modules.push_back(std::move(m));
    }

    line_off = sc.off;
    line = sc.next_line("BB Table");
    size_t n_bbs = 0;
    {
        if (line.rfind("BB Table:", 0) != 0)
            throw DrcovParseError("missing BB table line: '" + line + "'", line_off);
        std::string rest = trim(line.substr(strlen("BB Table:")));
        size_t sp = rest.find(' ');
        std::string count_str = sp == std::string::npos ? rest : rest.substr(0, sp);
        n_bbs = parse_u64(count_str, line_off, "bb count");
    }

    size_t bin_off = sc.off;
    size_t expected = n_bbs * 8;
    if (log.size() - bin_off < expected)
        throw DrcovParseError("BB table truncated: expected " + std::to_string(expected) +
                                  " bytes of records, got " + std::to_string(log.size() - bin_off),
                              log.size());
    if (log.size() - bin_off > expected)
        throw DrcovParseError("record count mismatch: " + std::to_string(log.size() - bin_off - expected) +
                                  " trailing bytes after " + std::to_string(n_bbs) + " records",
                              bin_off + expected);

    ByteReader r(log.data() + bin_off, expected);
    for (size_t i = 0; i < n_bbs; ++i) {
        size_t rec_off = bin_off + i * 8;
        uint32_t start = r.u32le();
        (void)r.u16le();  // block size, not part of the identity
        uint16_t mod = r.u16le();
        if (!module_index.count(mod))
            throw DrcovParseError("record references unknown module id " + std::to_string(mod), rec_off);
        data.blocks.insert(BasicBlockId{mod, start});
    }
    data.record_count = n_bbs;
    return data;
}

Bytes emit_drcov(const CoverageSet& blocks, const std::vector<DrcovModule>& modules) {
    std::string header;
    header += "DRCOV VERSION: 2\n";
    header += "DRCOV FLAVOR: drcov\n";
    header += "Module Table: version 2, count " + std::to_string(modules.size()) + "\n";
    header += "Columns: id, base, end, entry, path\n";
    char buf[160];
    for (const auto& m : modules) {
        std::snprintf(buf, sizeof buf, "%3u, 0x%016llx, 0x%016llx, 0x%016llx, ", unsigned(m.id),
                      (unsigned long long)m.base, (unsigned long long)m.end, (unsigned long long)m.base);
        header += buf;
        header += m.path + "\n";
    }
    header += "BB Table: " + std::to_string(blocks.size()) + " bbs\n";

    ByteWriter w;
    w.raw(header.data(), header.size());
    for (const auto& b : blocks) {
        w.u32le(b.offset);
        w.u16le(4);  // nominal block size
        w.u16le(b.module_id);
    }
    return w.take();
}

CoverageSet filter_by_module(const DrcovData& data, const std::string& path_substring) {
    CoverageSet out;
    for (const auto& b : data.blocks) {
        for (const auto& m : data.modules) {
            if (m.id == b.module_id && m.path.find(path_substring) != std::string::npos) {
                out.insert(b);
                break;
            }
        }
    }
    return out;
}

}  // namespace rlfuzz::cov
