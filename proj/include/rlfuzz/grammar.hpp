#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rlfuzz/rng.hpp"

namespace rlfuzz::grammar {

enum class AttrKind { FixedSet, IntegerRange, RandomString, UrlLike };

struct AttrSpec {
    std::string name;
    AttrKind kind = AttrKind::RandomString;
    std::vector<std::string> options;  // FixedSet
    long long lo = 0, hi = 0;          // IntegerRange
};

enum class ContentModel { Void, Text, Nestable };

struct TagSpec {
    std::string name;
    ContentModel content_model = ContentModel::Nestable;
    std::vector<AttrSpec> attributes;
};

// throws std::invalid_argument when the TagSpec invariants are violated
void validate(const TagSpec& spec);

struct GrammarConfig {
    std::vector<TagSpec> tags;
    int max_attrs_per_tag = 3;
    uint64_t rng_seed = 0;
    // rate at which attribute value generators break the rules
    // (over-long strings, out-of-range integers)
    double error_rate = 0.05;
};

void validate(const GrammarConfig& cfg);

enum class TestCaseSource { Grammar, Tcn, Ddqn };

struct TestCase {
    std::string content;
    TestCaseSource source = TestCaseSource::Grammar;
    size_t tag_count = 0;
    std::string created_from;  // seed or checkpoint identifier
};

// The basic HTML template test cases are built from; tags are inserted at
// the marker.
inline constexpr const char* kInsertionMarker = "|";
inline constexpr const char* kDefaultTemplate =
    "<!DOCTYPE html><html><head></head><body>|</body></html>";

// One syntactically well-formed tag string; closing tag included unless the
// content model is void. Deterministic for a fixed rng state.
std::string generate_tag(Rng& rng, const TagSpec& spec, double error_rate = 0.0,
                         size_t max_attrs = SIZE_MAX);

// Replaces the single insertion marker with the concatenated tags.
// Throws std::invalid_argument when the marker is missing or duplicated.
TestCase build_test_case(const std::vector<std::string>& tags, const std::string& templ,
                         TestCaseSource source = TestCaseSource::Grammar,
                         const std::string& created_from = "");

struct CorpusManifest {
    uint64_t seed = 0;
    uint64_t total = 0;
    std::map<std::string, uint64_t> per_tag_counts;

    std::string to_text() const;
    static CorpusManifest from_text(const std::string& text);
};

// Emits n_tags tags, one per line, and returns the manifest.
// Byte-identical reruns under the same config.
CorpusManifest generate_corpus(const GrammarConfig& cfg, uint64_t n_tags, std::ostream& out);

// The shipped tag inventory (>= 60 common HTML5 tags with attribute specs).
GrammarConfig default_grammar(uint64_t seed = 0);

// Ordered tag names of a grammar; the DDQN action space is built from these.
std::vector<std::string> tag_names(const GrammarConfig& cfg);

}  // namespace rlfuzz::grammar
