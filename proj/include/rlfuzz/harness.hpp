#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlfuzz/coverage.hpp"

namespace rlfuzz::cov {

struct HarnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HarnessDescriptor {
    std::string name;
    std::vector<std::string> module_paths;
};

// Executes one test case and reports the basic blocks it covered.
// Deterministic targets return identical sets for identical inputs.
class TargetHarness {
public:
    virtual ~TargetHarness() = default;
    virtual CoverageSet execute(const std::string& test_case) = 0;
    virtual HarnessDescriptor descriptor() const = 0;
};

// The bundled instrumented HTML parser.
class ToyTargetHarness final : public TargetHarness {
public:
    CoverageSet execute(const std::string& test_case) override;
    HarnessDescriptor descriptor() const override;
};

// Adapter for externally instrumented targets: runs a command that is
// expected to write a DrCov version-2 log, then parses the log and keeps
// blocks of the module of interest. The command template may contain
// {input} (test case path) and {log} (expected log path).
class DrcovCommandHarness final : public TargetHarness {
public:
    DrcovCommandHarness(std::string command_template, std::string log_path,
                        std::string module_filter, std::string work_dir);

    CoverageSet execute(const std::string& test_case) override;
    HarnessDescriptor descriptor() const override;

private:
    std::string command_template_;
    std::string log_path_;
    std::string module_filter_;
    std::string work_dir_;
    uint64_t serial_ = 0;
};

// Registry used by the CLI and the worker: "toy" or "drcov:<cmd>|<log>|<module>"
std::unique_ptr<TargetHarness> make_harness(const std::string& spec, const std::string& work_dir);

}  // namespace rlfuzz::cov
