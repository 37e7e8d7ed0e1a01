#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlfuzz/corpus.hpp"
#include "rlfuzz/ddqn.hpp"
#include "rlfuzz/grammar.hpp"
#include "rlfuzz/harness.hpp"
#include "rlfuzz/tcn.hpp"

namespace rlfuzz::env {

struct EpisodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Continues a partial document. When seed_tag is nonempty, "<" + seed_tag is
// appended first and generation stops once that tag's closing '>' appears;
// in both cases at most char_cap characters are sampled per call.
class TestCaseGenerator {
public:
    virtual ~TestCaseGenerator() = default;
    virtual void extend(std::string& doc, const std::string& seed_tag, size_t char_cap,
                        Rng& rng) = 0;
};

// Production generator: the trained TCN continuing from the document tail
// under the usual sliding-window rule.
class TcnGenerator final : public TestCaseGenerator {
public:
    TcnGenerator(const tcn::TcnModel& model, const corpus::Vocabulary& vocab,
                 double temperature = 1.0);
    void extend(std::string& doc, const std::string& seed_tag, size_t char_cap, Rng& rng) override;

private:
    tcn::TcnSampler sampler_;
    double temperature_;
};

struct EnvConfig {
    std::string templ = grammar::kDefaultTemplate;
    size_t target_len = 12000;   // terminal once this many characters were emitted
    size_t step_char_cap = 250;  // per-step sampling bound (one generator window)
    size_t max_steps = 100000;   // safety bound; exceeding it aborts the episode
};

struct RewardSpec {
    size_t target_len = 12000;
    // mean basic-block count of the plain generator's test cases; estimated
    // once per generator checkpoint before agent training
    double tcn_avg_blocks = 1.0;
};

struct EpisodeState {
    std::string partial_doc;  // template prefix + everything generated so far
    size_t prefix_len = 0;
    size_t chars_emitted = 0;
    std::vector<int> actions_taken;
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
    size_t coverage_blocks = 0;  // filled on the terminal step
};

class FuzzEnv {
public:
    FuzzEnv(EnvConfig cfg, ddqn::ActionSpace actions, TestCaseGenerator& generator,
            cov::TargetHarness& harness, RewardSpec reward);

    EpisodeState reset() const;
    StepResult step(EpisodeState& state, int action, Rng& rng) const;

    // full test case for the episode: partial document + template suffix
    std::string finalize(const EpisodeState& state) const;

    const EnvConfig& config() const { return cfg_; }
    const ddqn::ActionSpace& actions() const { return actions_; }
    const RewardSpec& reward_spec() const { return reward_; }

private:
    EnvConfig cfg_;
    ddqn::ActionSpace actions_;
    TestCaseGenerator& generator_;
    cov::TargetHarness& harness_;
    RewardSpec reward_;
    std::string prefix_, suffix_;
};

using Policy = std::function<int(const corpus::EncodedSequence&, Rng&)>;

struct EpisodeStepLog {
    int step = 0;
    int action = 0;
    size_t chars_emitted = 0;
    double reward = 0.0;
};

struct EpisodeRecord {
    grammar::TestCase test_case;
    std::vector<ddqn::Experience> experiences;
    std::vector<EpisodeStepLog> log;
    double terminal_reward = 0.0;
    size_t coverage_blocks = 0;
};

// Runs one episode to the terminal length. States stored in the experiences
// are the latest state_window characters of the partial document, encoded.
// A harness failure aborts the episode: no experiences are kept and the
// error propagates.
EpisodeRecord run_episode(const FuzzEnv& env, const Policy& policy,
                          const corpus::Vocabulary& vocab, int state_window, Rng& rng);

// line-delimited "step action chars_emitted reward" records
std::string episode_log_lines(const EpisodeRecord& record);

// Mean coverage over n_cases greedy rollouts of the agent.
double evaluate_checkpoint(const FuzzEnv& env, const ddqn::DdqnAgent& agent,
                           const corpus::Vocabulary& vocab, int n_cases, Rng& rng);

// Mean coverage of generator-only test cases (the CONTINUE policy); used to
// fix RewardSpec::tcn_avg_blocks before agent training.
double estimate_generator_avg_blocks(const FuzzEnv& env, const corpus::Vocabulary& vocab,
                                     int n_cases, Rng& rng);

// stable name for test-case files, derived from the content
std::string content_hash_hex(const std::string& content);

}  // namespace rlfuzz::env
