#pragma once

#include <string_view>

#include "rlfuzz/coverage.hpp"

namespace rlfuzz::cov {

// Bundled deterministic instrumented HTML parser (tokenizer + tree builder).
// It stands in for an externally instrumented render engine: executing a test
// case returns the set of probe points hit, reported as basic blocks in
// module kToyModuleId.
//
// Probe ids are stable, assigned at authoring time:
//     0..3     lifecycle (0 start, 1 input scanned, 2 tree finalized, 3 epilogue)
//    10..39    tokenizer states and transitions
//    60..89    error-recovery branches
//    90..99    character references
//   100..139   attribute-name classes
//   140..149   attribute-value classes
//   150..189   tree-builder structure (depth buckets, implicit closes, nesting pairs)
//   190..199   unknown-tag name buckets
//   200..417   per-tag handlers, two per known tag (open = 200+2i, close = 201+2i)
//   500..608   per-tag attributed-open handlers (500+i)
//
// Malformed input never fails; it lands in error-recovery probes instead.

constexpr uint16_t kToyModuleId = 0;
constexpr const char* kToyModulePath = "bundled://toyhtml";

// Executes the parser on the given document and returns the probes hit.
CoverageSet toy_target_execute(std::string_view html);

// Probe set hit by the empty input: exactly the lifecycle probes {0,1,2,3}.
CoverageSet toy_baseline_probes();

// Total number of distinct probe points in the target.
size_t toy_probe_count();

// Number of known tags in the per-tag handler table.
size_t toy_known_tag_count();

// Index of a tag in the handler table, or -1 when unknown.
int toy_tag_index(std::string_view name);

}  // namespace rlfuzz::cov
