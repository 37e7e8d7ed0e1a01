#include "rlfuzz/fuzz_env.hpp"

#include <algorithm>
#include <cstdio>

namespace rlfuzz::env {

TcnGenerator::TcnGenerator(const tcn::TcnModel& model, const corpus::Vocabulary& vocab,
                           double temperature)
    : sampler_(model, vocab), temperature_(temperature) {}

void TcnGenerator::extend(std::string& doc, const std::string& seed_tag, size_t char_cap,
                          Rng& rng) {
    if (!seed_tag.empty()) doc += "<" + seed_tag;
    sampler_.reset(doc);
    size_t sampled = 0;
    while (sampled < char_cap) {
        char c = sampler_.sample_next(rng, temperature_);
        doc += c;
        ++sampled;
        if (!seed_tag.empty() && c == '>') break;  // the seeded tag is complete
    }
}

FuzzEnv::FuzzEnv(EnvConfig cfg, ddqn::ActionSpace actions, TestCaseGenerator& generator,
                 cov::TargetHarness& harness, RewardSpec reward)
    : cfg_(std::move(cfg)),
      actions_(std::move(actions)),
      generator_(generator),
      harness_(harness),
      reward_(reward) {
    if (reward_.tcn_avg_blocks <= 0.0)
        throw std::invalid_argument("fuzz env: tcn_avg_blocks must be positive");
    size_t marker = cfg_.templ.find(grammar::kInsertionMarker);
    if (marker == std::string::npos)
        throw std::invalid_argument("fuzz env: template has no insertion marker");
    prefix_ = cfg_.templ.substr(0, marker);
    suffix_ = cfg_.templ.substr(marker + 1);
}

EpisodeState FuzzEnv::reset() const {
    EpisodeState s;
    s.partial_doc = prefix_;
    s.prefix_len = prefix_.size();
    s.chars_emitted = 0;
    return s;
}

StepResult FuzzEnv::step(EpisodeState& state, int action, Rng& rng) const {
    if (action < 0 || action >= actions_.size())
        throw std::invalid_argument("fuzz env: action outside the action space");

    const std::string seed_tag = actions_.is_continue(action) ? "" : actions_.tag_name(action);
    generator_.extend(state.partial_doc, seed_tag, cfg_.step_char_cap, rng);
    state.chars_emitted = state.partial_doc.size() - state.prefix_len;
    state.actions_taken.push_back(action);

    StepResult result;
    if (state.chars_emitted >= reward_.target_len) {
        result.done = true;
        cov::CoverageSet coverage = harness_.execute(finalize(state));
        result.coverage_blocks = coverage.size();
        result.reward = double(coverage.size()) / reward_.tcn_avg_blocks;
    }
    return result;
}

std::string FuzzEnv::finalize(const EpisodeState& state) const {
    return state.partial_doc + suffix_;
}

namespace {

corpus::EncodedSequence encode_tail(const std::string& doc, int window,
                                    const corpus::Vocabulary& vocab) {
    size_t n = std::min(doc.size(), size_t(window));
    return vocab.encode(std::string_view(doc).substr(doc.size() - n));
}

}  // namespace

EpisodeRecord run_episode(const FuzzEnv& env, const Policy& policy,
                          const corpus::Vocabulary& vocab, int state_window, Rng& rng) {
    EpisodeRecord record;
    EpisodeState state = env.reset();
    corpus::EncodedSequence s = encode_tail(state.partial_doc, state_window, vocab);

    size_t steps = 0;
    while (true) {
        if (++steps > env.config().max_steps)
            throw EpisodeError("episode exceeded the step bound without reaching the target length");
        int action = policy(s, rng);
        StepResult r = env.step(state, action, rng);
        corpus::EncodedSequence s_next = encode_tail(state.partial_doc, state_window, vocab);

        ddqn::Experience exp;
        exp.state = std::move(s);
        exp.action = action;
        exp.reward = r.reward;
        exp.next_state = s_next;
        exp.terminal = r.done;
        record.experiences.push_back(std::move(exp));
        record.log.push_back({int(steps), action, state.chars_emitted, r.reward});

        if (r.done) {
            record.terminal_reward = r.reward;
            record.coverage_blocks = r.coverage_blocks;
            break;
        }
        s = std::move(s_next);
    }

    record.test_case.content = env.finalize(state);
    record.test_case.source = grammar::TestCaseSource::Ddqn;
    record.test_case.tag_count = state.actions_taken.size();
    return record;
}

std::string episode_log_lines(const EpisodeRecord& record) {
    std::string out;
    char buf[96];
    for (const auto& e : record.log) {
        std::snprintf(buf, sizeof buf, "%d %d %zu %.9f\n", e.step, e.action, e.chars_emitted,
                      e.reward);
        out += buf;
    }
    return out;
}

double evaluate_checkpoint(const FuzzEnv& env, const ddqn::DdqnAgent& agent,
                           const corpus::Vocabulary& vocab, int n_cases, Rng& rng) {
    if (n_cases < 1) throw std::invalid_argument("evaluate_checkpoint: n_cases must be positive");
    Policy greedy = [&agent](const corpus::EncodedSequence& s, Rng&) {
        return agent.act_greedy(s);
    };
    double total = 0.0;
    for (int i = 0; i < n_cases; ++i) {
        EpisodeRecord rec = run_episode(env, greedy, vocab, agent.config().state_window, rng);
        total += double(rec.coverage_blocks);
    }
    return total / double(n_cases);
}

double estimate_generator_avg_blocks(const FuzzEnv& env, const corpus::Vocabulary& vocab,
                                     int n_cases, Rng& rng) {
    if (n_cases < 1) throw std::invalid_argument("estimate_generator_avg_blocks: n_cases must be positive");
    int cont = env.actions().continue_action();
    Policy continue_only = [cont](const corpus::EncodedSequence&, Rng&) { return cont; };
    double total = 0.0;
    for (int i = 0; i < n_cases; ++i) {
        EpisodeRecord rec = run_episode(env, continue_only, vocab, 1, rng);
        total += double(rec.coverage_blocks);
    }
    return total / double(n_cases);
}

std::string content_hash_hex(const std::string& content) {
    // FNV-1a, 64-bit
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace rlfuzz::env
