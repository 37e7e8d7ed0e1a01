#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlfuzz/fuzz_env.hpp"
#include "rlfuzz/toy_target.hpp"

using namespace rlfuzz;
using namespace rlfuzz::env;

namespace {

// deterministic scripted generator: tags close immediately, CONTINUE pads
class ScriptedGenerator : public TestCaseGenerator {
public:
    explicit ScriptedGenerator(size_t continue_len = 40) : continue_len_(continue_len) {}
    void extend(std::string& doc, const std::string& seed_tag, size_t char_cap, Rng&) override {
        if (!seed_tag.empty()) {
            doc += "<" + seed_tag;
            doc += " x=\"1\">";
        } else {
            doc += std::string(std::min(char_cap, continue_len_), 'x');
        }
    }

private:
    size_t continue_len_;
};

// harness returning a fixed-cardinality set
class FixedHarness : public cov::TargetHarness {
public:
    explicit FixedHarness(size_t blocks) : blocks_(blocks) {}
    cov::CoverageSet execute(const std::string&) override {
        cov::CoverageSet s;
        for (size_t i = 0; i < blocks_; ++i) s.insert({0, uint32_t(i)});
        return s;
    }
    cov::HarnessDescriptor descriptor() const override { return {"fixed", {"fixed"}}; }

private:
    size_t blocks_;
};

class ThrowingHarness : public cov::TargetHarness {
public:
    cov::CoverageSet execute(const std::string&) override {
        throw cov::HarnessError("target exploded");
    }
    cov::HarnessDescriptor descriptor() const override { return {"boom", {}}; }
};

ddqn::ActionSpace small_actions() { return ddqn::ActionSpace{{"br", "div", "img"}}; }

corpus::Vocabulary test_vocab() {
    return corpus::Vocabulary::build("<>abcdefghijklmnopqrstuvwxyz \"=/!DOCTYPEhtml1x");
}

}  // namespace

TEST_CASE("reset: template prefix up to the insertion point") {
    ScriptedGenerator gen;
    FixedHarness harness(100);
    EnvConfig cfg;
    cfg.target_len = 200;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{200, 50.0});

    EpisodeState s1 = env.reset();
    EpisodeState s2 = env.reset();
    CHECK(s1.partial_doc == s2.partial_doc);
    CHECK(s1.partial_doc == "<!DOCTYPE html><html><head></head><body>");
    CHECK(s1.chars_emitted == 0);
    CHECK(s1.actions_taken.empty());
}

TEST_CASE("step: tag actions seed '<' + tag at the former tail") {
    ScriptedGenerator gen;
    FixedHarness harness(100);
    EnvConfig cfg;
    cfg.target_len = 5000;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{5000, 50.0});

    EpisodeState s = env.reset();
    size_t before = s.partial_doc.size();
    Rng rng(0);
    StepResult r = env.step(s, 0, rng);  // "br"
    CHECK(s.partial_doc.substr(before, 3) == "<br");
    CHECK(r.reward == 0.0);
    CHECK(!r.done);
    CHECK(s.actions_taken == std::vector<int>{0});

    CHECK_THROWS_AS(env.step(s, 99, rng), std::invalid_argument);
}

TEST_CASE("non-terminal steps pay exactly zero") {
    ScriptedGenerator gen(50);
    FixedHarness harness(123);
    EnvConfig cfg;
    cfg.target_len = 1000;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{1000, 10.0});
    EpisodeState s = env.reset();
    Rng rng(1);
    while (true) {
        StepResult r = env.step(s, 3, rng);  // CONTINUE
        if (r.done) {
            CHECK(r.reward > 0.0);
            break;
        }
        CHECK(r.reward == 0.0);
    }
}

TEST_CASE("terminal reward is |coverage| / generator average") {
    ScriptedGenerator gen(250);
    FixedHarness harness(54000);
    EnvConfig cfg;
    cfg.target_len = 500;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{500, 52000.0});
    EpisodeState s = env.reset();
    Rng rng(2);
    StepResult r1 = env.step(s, 3, rng);
    CHECK(!r1.done);
    StepResult r2 = env.step(s, 3, rng);
    CHECK(r2.done);
    CHECK(r2.reward == doctest::Approx(1.0385).epsilon(1e-4));
    CHECK(r2.coverage_blocks == 54000);
}

TEST_CASE("tcn_avg_blocks must be positive") {
    ScriptedGenerator gen;
    FixedHarness harness(10);
    EnvConfig cfg;
    CHECK_THROWS_AS(FuzzEnv(cfg, small_actions(), gen, harness, RewardSpec{100, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("run_episode: chained states, single terminal reward") {
    ScriptedGenerator gen(33);
    FixedHarness harness(80);
    EnvConfig cfg;
    cfg.target_len = 700;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{700, 40.0});
    corpus::Vocabulary vocab = test_vocab();

    Rng rng(3);
    Policy policy = [](const corpus::EncodedSequence&, Rng& r) { return int(r.uniform(4)); };
    EpisodeRecord rec = run_episode(env, policy, vocab, 64, rng);

    REQUIRE(!rec.experiences.empty());
    // chaining: exp[i].next_state == exp[i+1].state
    for (size_t i = 0; i + 1 < rec.experiences.size(); ++i)
        CHECK(rec.experiences[i].next_state == rec.experiences[i + 1].state);

    // exactly one nonzero reward, and it is terminal
    int nonzero = 0;
    double sum = 0.0;
    for (const auto& e : rec.experiences) {
        sum += e.reward;
        if (e.reward != 0.0) {
            ++nonzero;
            CHECK(e.terminal);
        }
    }
    CHECK(nonzero == 1);
    CHECK(sum == doctest::Approx(rec.terminal_reward));
    CHECK(rec.experiences.back().terminal);
    CHECK(rec.test_case.content.size() >= 700);
    CHECK(rec.test_case.source == grammar::TestCaseSource::Ddqn);
}

TEST_CASE("document only grows within an episode") {
    ScriptedGenerator gen(20);
    FixedHarness harness(10);
    EnvConfig cfg;
    cfg.target_len = 400;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{400, 5.0});
    EpisodeState s = env.reset();
    Rng rng(4);
    size_t last = s.partial_doc.size();
    for (int i = 0; i < 30; ++i) {
        StepResult r = env.step(s, int(rng.uniform(4)), rng);
        CHECK(s.partial_doc.size() >= last);
        last = s.partial_doc.size();
        if (r.done) break;
    }
}

TEST_CASE("harness failure aborts the episode and surfaces the error") {
    ScriptedGenerator gen(250);
    ThrowingHarness harness;
    EnvConfig cfg;
    cfg.target_len = 300;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{300, 5.0});
    corpus::Vocabulary vocab = test_vocab();
    Rng rng(5);
    Policy policy = [](const corpus::EncodedSequence&, Rng&) { return 3; };
    CHECK_THROWS_AS(run_episode(env, policy, vocab, 32, rng), cov::HarnessError);
}

TEST_CASE("an unproductive generator aborts instead of spinning") {
    ScriptedGenerator gen(0);  // CONTINUE emits nothing
    FixedHarness harness(10);
    EnvConfig cfg;
    cfg.target_len = 100;
    cfg.max_steps = 50;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{100, 5.0});
    corpus::Vocabulary vocab = test_vocab();
    Rng rng(6);
    Policy policy = [](const corpus::EncodedSequence&, Rng&) { return 3; };
    CHECK_THROWS_AS(run_episode(env, policy, vocab, 32, rng), EpisodeError);
}

TEST_CASE("episode log lines carry step, action, chars, reward") {
    ScriptedGenerator gen(120);
    FixedHarness harness(60);
    EnvConfig cfg;
    cfg.target_len = 300;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{300, 30.0});
    corpus::Vocabulary vocab = test_vocab();
    Rng rng(7);
    Policy policy = [](const corpus::EncodedSequence&, Rng&) { return 3; };
    EpisodeRecord rec = run_episode(env, policy, vocab, 32, rng);
    std::string lines = episode_log_lines(rec);
    CHECK(lines.find("1 3 ") == 0);
    size_t n_lines = 0;
    for (char c : lines)
        if (c == '\n') ++n_lines;
    CHECK(n_lines == rec.experiences.size());
}

TEST_CASE("evaluate_checkpoint: deterministic mean over greedy rollouts") {
    ScriptedGenerator gen(100);
    cov::ToyTargetHarness harness;
    EnvConfig cfg;
    cfg.target_len = 600;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{600, 10.0});
    corpus::Vocabulary vocab = test_vocab();

    ddqn::DdqnConfig dcfg;
    dcfg.convs = {{4, 2, 4}};
    dcfg.dense = {8};
    dcfg.state_window = 32;
    std::vector<double> embed(size_t(vocab.size()) * 4, 0.01);
    ddqn::DdqnAgent agent(dcfg, 4, vocab.size(), 4, embed, 1);

    Rng r1(9), r2(9);
    double m1 = evaluate_checkpoint(env, agent, vocab, 4, r1);
    double m2 = evaluate_checkpoint(env, agent, vocab, 4, r2);
    CHECK(m1 == m2);
    CHECK(m1 > 0.0);

    Rng r3(9);
    double single = evaluate_checkpoint(env, agent, vocab, 1, r3);
    CHECK(single > 0.0);
}

TEST_CASE("generator average estimate uses CONTINUE only") {
    ScriptedGenerator gen(100);
    FixedHarness harness(77);
    EnvConfig cfg;
    cfg.target_len = 300;
    FuzzEnv env(cfg, small_actions(), gen, harness, RewardSpec{300, 1.0});
    corpus::Vocabulary vocab = test_vocab();
    Rng rng(10);
    CHECK(estimate_generator_avg_blocks(env, vocab, 3, rng) == doctest::Approx(77.0));
}

TEST_CASE("content hash is stable and collision-averse on small variations") {
    CHECK(content_hash_hex("abc") == content_hash_hex("abc"));
    CHECK(content_hash_hex("abc") != content_hash_hex("abd"));
    CHECK(content_hash_hex("").size() == 16);
}
