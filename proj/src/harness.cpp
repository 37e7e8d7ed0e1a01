#include "rlfuzz/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rlfuzz/drcov.hpp"
#include "rlfuzz/toy_target.hpp"

namespace rlfuzz::cov {

CoverageSet ToyTargetHarness::execute(const std::string& test_case) {
    return toy_target_execute(test_case);
}

HarnessDescriptor ToyTargetHarness::descriptor() const {
    return HarnessDescriptor{"toy", {kToyModulePath}};
}

DrcovCommandHarness::DrcovCommandHarness(std::string command_template, std::string log_path,
                                         std::string module_filter, std::string work_dir)
    : command_template_(std::move(command_template)),
      log_path_(std::move(log_path)),
      module_filter_(std::move(module_filter)),
      work_dir_(std::move(work_dir)) {}

CoverageSet DrcovCommandHarness::execute(const std::string& test_case) {
    std::string input_path = work_dir_ + "/case_" + std::to_string(serial_++) + ".html";
    {
        std::ofstream f(input_path, std::ios::binary);
        if (!f) throw HarnessError("cannot write test case file: " + input_path);
        f.write(test_case.data(), std::streamsize(test_case.size()));
    }

    std::string cmd = command_template_;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size()))
            s.replace(p, from.size(), to);
    };
    replace_all(cmd, "{input}", input_path);
    replace_all(cmd, "{log}", log_path_);

    int rc = std::system(cmd.c_str());
    if (rc != 0) throw HarnessError("target command failed with status " + std::to_string(rc));

    std::ifstream log(log_path_, std::ios::binary);
    if (!log) throw HarnessError("target produced no log at " + log_path_);
    std::stringstream ss;
    ss << log.rdbuf();
    std::string raw = ss.str();
    DrcovData data = parse_drcov(Bytes(raw.begin(), raw.end()));
    std::remove(input_path.c_str());
    if (module_filter_.empty()) return data.blocks;
    return filter_by_module(data, module_filter_);
}

HarnessDescriptor DrcovCommandHarness::descriptor() const {
    return HarnessDescriptor{"drcov", {module_filter_}};
}

std::unique_ptr<TargetHarness> make_harness(const std::string& spec, const std::string& work_dir) {
    if (spec == "toy") return std::make_unique<ToyTargetHarness>();
    if (spec.rfind("drcov:", 0) == 0) {
        std::string rest = spec.substr(6);
        std::vector<std::string> parts;
        std::string cur;
        for (char c : rest + "|") {
            if (c == '|') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (parts.size() != 3)
            throw HarnessError("drcov harness spec needs 'drcov:<command>|<log path>|<module substring>'");
        return std::make_unique<DrcovCommandHarness>(parts[0], parts[1], parts[2], work_dir);
    }
    throw HarnessError("unknown target harness: " + spec);
}

}  // namespace rlfuzz::cov
