#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>

#include "rlfuzz/grammar.hpp"

#include "rlfuzz/coverage.hpp"
#include "rlfuzz/drcov.hpp"
#include "rlfuzz/harness.hpp"
#include "rlfuzz/rng.hpp"
#include "rlfuzz/toy_target.hpp"

using namespace rlfuzz;
using namespace rlfuzz::cov;

namespace {

Bytes make_log(const std::string& header, const std::vector<std::array<uint32_t, 3>>& records) {
    ByteWriter w;
    w.raw(header.data(), header.size());
    for (const auto& r : records) {
        w.u32le(r[0]);           // start
        w.u16le(uint16_t(r[1]));  // size
        w.u16le(uint16_t(r[2]));  // mod
    }
    return w.take();
}

std::string v2_header(int n_modules, size_t n_bbs) {
    std::string h = "DRCOV VERSION: 2\nDRCOV FLAVOR: drcov\n";
    h += "Module Table: version 2, count " + std::to_string(n_modules) + "\n";
    h += "Columns: id, base, end, entry, path\n";
    for (int i = 0; i < n_modules; ++i)
        h += std::to_string(i) + ", 0x400000, 0x500000, 0x400000, /opt/mod" + std::to_string(i) +
             ".so\n";
    h += "BB Table: " + std::to_string(n_bbs) + " bbs\n";
    return h;
}

}  // namespace

TEST_CASE("coverage set algebra") {
    CoverageSet a = {{0, 1}, {0, 2}};
    CoverageSet b = {{0, 2}, {0, 3}};
    CHECK(coverage_union({a, b}) == CoverageSet{{0, 1}, {0, 2}, {0, 3}});
    CHECK(coverage_unique(a, b) == CoverageSet{{0, 1}});
    CHECK(coverage_unique(a, a).empty());
}

TEST_CASE("unique + intersection partitions the candidate set") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        CoverageSet a, b;
        for (int i = 0; i < 500; ++i) {
            a.insert({uint16_t(rng.uniform(3)), uint32_t(rng.uniform(1000))});
            b.insert({uint16_t(rng.uniform(3)), uint32_t(rng.uniform(1000))});
        }
        CoverageSet uniq = coverage_unique(a, b);
        size_t inter = 0;
        for (const auto& x : a)
            if (b.count(x)) ++inter;
        CHECK(uniq.size() + inter == a.size());
    }
}

TEST_CASE("set-difference brute-force equivalence on random sets") {
    Rng rng(13);
    CoverageSet a, b;
    for (int i = 0; i < 10000; ++i) {
        a.insert({uint16_t(rng.uniform(4)), uint32_t(rng.uniform(50000))});
        b.insert({uint16_t(rng.uniform(4)), uint32_t(rng.uniform(50000))});
    }
    CoverageSet expected;
    for (const auto& x : a) {
        bool found = false;
        for (const auto& y : b)
            if (x == y) {
                found = true;
                break;
            }
        if (!found) expected.insert(x);
    }
    CHECK(coverage_unique(a, b) == expected);
}

TEST_CASE("coverage text round trip") {
    CoverageSet s = {{0, 0}, {1, 0xdeadbeef}, {65535, 4294967295u}};
    CHECK(coverage_from_text(coverage_to_text(s)) == s);
}

// ---- drcov ----

TEST_CASE("drcov: duplicates collapse") {
    Bytes log = make_log(v2_header(1, 3), {{0x10, 4, 0}, {0x20, 4, 0}, {0x10, 4, 0}});
    DrcovData d = parse_drcov(log);
    CHECK(d.blocks.size() == 2);
    CHECK(d.record_count == 3);
    CHECK(d.modules.size() == 1);
    CHECK(d.modules[0].path == "/opt/mod0.so");
}

TEST_CASE("drcov: zero records") {
    Bytes log = make_log(v2_header(1, 0), {});
    CHECK(parse_drcov(log).blocks.empty());
}

TEST_CASE("drcov: unknown module id names the record offset") {
    Bytes log = make_log(v2_header(1, 2), {{0x10, 4, 0}, {0x20, 4, 9}});
    try {
        parse_drcov(log);
        FAIL("expected a parse error");
    } catch (const DrcovParseError& e) {
        CHECK(e.byte_offset == v2_header(1, 2).size() + 8);
    }
}

TEST_CASE("drcov: malformed headers") {
    CHECK_THROWS_AS(parse_drcov(to_bytes("DRCOV VERSION: 3\nxx\n")), DrcovParseError);
    CHECK_THROWS_AS(parse_drcov(to_bytes("garbage")), DrcovParseError);
    CHECK_THROWS_AS(parse_drcov(to_bytes("DRCOV VERSION: 2\nno flavor here")), DrcovParseError);
}

TEST_CASE("drcov: record count mismatch") {
    // one record too few
    Bytes log = make_log(v2_header(1, 3), {{0x10, 4, 0}, {0x20, 4, 0}});
    CHECK_THROWS_AS(parse_drcov(log), DrcovParseError);
    // trailing bytes
    Bytes log2 = make_log(v2_header(1, 1), {{0x10, 4, 0}});
    log2.push_back(0xFF);
    CHECK_THROWS_AS(parse_drcov(log2), DrcovParseError);
}

TEST_CASE("drcov: legacy module table count form") {
    std::string h = "DRCOV VERSION: 2\nDRCOV FLAVOR: drcov\nModule Table: 1\n";
    h += "0, 0x1000, 0x2000, 0x1000, /lib/a.so\nBB Table: 1 bbs\n";
    Bytes log = make_log(h, {{0x44, 4, 0}});
    DrcovData d = parse_drcov(log);
    CHECK(d.blocks == CoverageSet{{0, 0x44}});
}

TEST_CASE("drcov: emit/parse round trip") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        CoverageSet s;
        size_t n = rng.uniform(300);
        for (size_t i = 0; i < n; ++i)
            s.insert({uint16_t(rng.uniform(3)), uint32_t(rng.uniform(1u << 20))});
        std::vector<DrcovModule> mods = {{0, 0x1000, 0x2000, "/m0"},
                                         {1, 0x3000, 0x4000, "/m1"},
                                         {2, 0x5000, 0x6000, "/m2"}};
        DrcovData back = parse_drcov(emit_drcov(s, mods));
        CHECK(back.blocks == s);
        CHECK(back.modules.size() == 3);
    }
}

TEST_CASE("drcov: every truncation of a valid log is rejected") {
    Bytes log = make_log(v2_header(2, 4),
                         {{0x10, 4, 0}, {0x20, 4, 1}, {0x30, 4, 0}, {0x40, 4, 1}});
    CHECK_NOTHROW(parse_drcov(log));
    for (size_t cut = 0; cut < log.size(); ++cut) {
        Bytes truncated(log.begin(), log.begin() + long(cut));
        CHECK_THROWS_AS(parse_drcov(truncated), DrcovParseError);
    }
}

TEST_CASE("drcov: module filter") {
    Bytes log = make_log(v2_header(2, 2), {{0x10, 4, 0}, {0x20, 4, 1}});
    DrcovData d = parse_drcov(log);
    CHECK(filter_by_module(d, "mod0") == CoverageSet{{0, 0x10}});
    CHECK(filter_by_module(d, "mod1") == CoverageSet{{1, 0x20}});
    CHECK(filter_by_module(d, ".so").size() == 2);
}

// ---- toy target ----

TEST_CASE("toy target: empty input yields exactly the published baseline probes") {
    CHECK(toy_target_execute("") == toy_baseline_probes());
    CHECK(toy_baseline_probes().size() == 4);
}

TEST_CASE("toy target: <br> is a strict superset of the baseline") {
    CoverageSet br = toy_target_execute("<br>");
    CoverageSet base = toy_baseline_probes();
    CHECK(br.size() > base.size());
    for (const auto& b : base) CHECK(br.count(b));
}

TEST_CASE("toy target: determinism") {
    grammar::GrammarConfig cfg = grammar::default_grammar(21);
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::string doc;
        for (int i = 0; i < 40; ++i)
            doc += grammar::generate_tag(rng, cfg.tags[rng.uniform(cfg.tags.size())], 0.1);
        CHECK(toy_target_execute(doc) == toy_target_execute(doc));
    }
}

TEST_CASE("toy target: at least 300 probes, distinct tags hit distinct probes") {
    CHECK(toy_probe_count() >= 300);
    CoverageSet a = toy_target_execute("<div></div>");
    CoverageSet b = toy_target_execute("<span></span>");
    CHECK(a != b);
    CHECK(toy_tag_index("div") >= 0);
    CHECK(toy_tag_index("nosuchtag") == -1);
    CHECK(toy_known_tag_count() >= 100);
}

TEST_CASE("toy target: malformed input exercises error recovery instead of failing") {
    // unterminated tag, bogus entity, misnesting, null byte
    std::string nasty = std::string("<div><p>a</div>&bogus;<a href='x") + '\0' + "<";
    CoverageSet s = toy_target_execute(nasty);
    CHECK(s.size() > toy_baseline_probes().size());
    CHECK(toy_target_execute(nasty) == s);
}

TEST_CASE("toy target: deeper documents reach deeper depth probes") {
    std::string nest;
    for (int i = 0; i < 20; ++i) nest += "<div>";
    CoverageSet deep = toy_target_execute(nest);
    CoverageSet shallow = toy_target_execute("<div>");
    CHECK(deep.size() > shallow.size());
}

TEST_CASE("harness: toy wrapper and registry") {
    ToyTargetHarness h;
    CHECK(h.execute("") == toy_baseline_probes());
    CHECK(h.descriptor().name == "toy");
    auto made = make_harness("toy", "/tmp");
    CHECK(made->execute("<br>") == h.execute("<br>"));
    CHECK_THROWS_AS(make_harness("bogus", "/tmp"), HarnessError);
}
