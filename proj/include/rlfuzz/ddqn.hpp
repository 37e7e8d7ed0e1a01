#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rlfuzz/corpus.hpp"
#include "rlfuzz/kvconfig.hpp"
#include "rlfuzz/nn.hpp"
#include "rlfuzz/rng.hpp"

namespace rlfuzz::ddqn {

// Ordered tag actions plus one distinguished CONTINUE action (the final id),
// which lets the generator keep sampling without seeding a tag.
struct ActionSpace {
    std::vector<std::string> tags;

    int size() const { return int(tags.size()) + 1; }
    int continue_action() const { return int(tags.size()); }
    bool is_continue(int a) const { return a == continue_action(); }
    const std::string& tag_name(int a) const { return tags.at(size_t(a)); }
    std::string action_name(int a) const { return is_continue(a) ? "CONTINUE" : tags.at(size_t(a)); }
};

struct ConvSpec {
    int kernel = 3;
    int stride = 1;
    int filters = 32;
};

struct EpsSchedule {
    double start = 1.0;
    double end = 0.05;
    int64_t decay_steps = 50000;

    double value(int64_t step) const {
        if (step >= decay_steps) return end;
        return start + (end - start) * double(step) / double(decay_steps);
    }
};

struct DdqnConfig {
    std::string name = "custom";
    std::vector<ConvSpec> convs = {{8, 2, 16}, {4, 2, 32}, {3, 1, 64}, {3, 1, 64}};
    std::vector<int> dense = {128, 128, 128, 64};
    double learning_rate = 0.000645;
    double gamma = 0.99;
    int64_t target_sync_interval = 500;
    int state_window = 1024;
    EpsSchedule epsilon;
    int batch_size = 32;
    bool huber = false;
    // prioritized replay
    double per_alpha = 0.6;
    double per_beta_start = 0.4;
    double per_beta_end = 1.0;
    int64_t per_beta_steps = 100000;
    double per_epsilon = 1e-6;
    int64_t replay_capacity = 100000;
};

void validate(const DdqnConfig& cfg, int state_window_embed_check = 0);

// the four published hyper-parameter rows, named C1..C4
std::vector<DdqnConfig> presets();
DdqnConfig preset(const std::string& name);

KvConfig config_to_kv(const DdqnConfig& cfg);
DdqnConfig config_from_kv(const KvConfig& kv);

struct Experience {
    corpus::EncodedSequence state;
    int action = 0;
    double reward = 0.0;
    corpus::EncodedSequence next_state;
    bool terminal = false;

    bool operator==(const Experience&) const = default;
};

// epsilon-greedy over a Q-value vector; argmax takes the lowest index on ties
int select_action(const std::vector<double>& q, double epsilon, Rng& rng);

using QFn = std::function<std::vector<double>(const corpus::EncodedSequence&)>;

// y_i = r_i for terminal entries, otherwise
// y_i = r_i + gamma * Q_target(s', argmax_a Q_online(s', a)).
// Consults each network exactly once per non-terminal entry.
std::vector<double> double_q_target(const std::vector<Experience>& batch, const QFn& online,
                                    const QFn& target, double gamma);

// ---- prioritized replay ----

class PrioritizedReplay {
public:
    PrioritizedReplay(size_t capacity, double alpha, double eps_p = 1e-6);

    // new entries receive the current maximum priority
    size_t insert(Experience exp);

    size_t size() const { return size_; }
    size_t capacity() const { return capacity_; }

    struct Batch {
        std::vector<size_t> indices;
        std::vector<Experience> items;
        std::vector<double> weights;  // importance weights, normalized by the max
    };
    // P(i) = p_i^alpha / sum p^alpha; w_i = (N * P(i))^-beta / max_j w_j
    Batch sample(size_t batch_size, double beta, Rng& rng) const;

    // after a training step: p_i = |td_error| + eps_p
    void update_priorities(const std::vector<size_t>& indices, const std::vector<double>& td_errors);

    double priority(size_t index) const;            // raw p_i
    double sample_probability(size_t index) const;  // P(i)
    const Experience& at(size_t index) const { return items_[index]; }

private:
    void tree_set(size_t index, double p_alpha);

    size_t capacity_;
    double alpha_;
    double eps_p_;
    size_t size_ = 0;
    size_t next_slot_ = 0;
    double max_priority_ = 1.0;
    std::vector<Experience> items_;
    std::vector<double> priorities_;  // raw p_i
    size_t tree_base_;
    std::vector<double> sum_tree_;  // p^alpha sums
    std::vector<double> min_tree_;  // p^alpha minima
};

// ---- Q-network ----

class QNetwork {
public:
    // embed_table is the TCN generator's embedding ([vocab][embed_dim]); it
    // is loaded frozen and never updated by training
    QNetwork(const DdqnConfig& cfg, int n_actions, int vocab_size, int embed_dim,
             const std::vector<double>& embed_table, uint64_t init_seed);

    std::vector<double> forward(const corpus::EncodedSequence& state) const;

    // forward with caches + backward from dQ (gradient only on the Q outputs)
    std::vector<double> forward_backward(const corpus::EncodedSequence& state,
                                         const std::vector<double>& dq);

    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    int n_actions() const { return n_actions_; }
    const DdqnConfig& config() const { return cfg_; }
    int vocab_size() const { return vocab_size_; }
    int embed_dim() const { return embed_dim_; }
    const std::vector<double>& embed_table() const { return embed_->w; }

    // pad/truncate to the state window: the latest W ids, left-padded with 0
    corpus::EncodedSequence window_state(const corpus::EncodedSequence& state) const;

private:
    struct Acts;
    void forward_impl(const corpus::EncodedSequence& state, Acts& acts) const;

    DdqnConfig cfg_;
    int n_actions_;
    int vocab_size_;
    int embed_dim_;
    nn::ParamSet params_;
    nn::Param* embed_;
    struct ConvParams {
        nn::Param* w;
        nn::Param* b;
        ConvSpec spec;
    };
    std::vector<ConvParams> convs_;
    struct DenseParams {
        nn::Param* w;
        nn::Param* b;
    };
    std::vector<DenseParams> denses_;
    nn::Param *out_w_, *out_b_;
};

// ---- agent ----

struct TrainStepStats {
    double loss = 0.0;
    double mean_abs_td = 0.0;
    bool synced_target = false;
};

class DdqnAgent {
public:
    DdqnAgent(const DdqnConfig& cfg, int n_actions, int vocab_size, int embed_dim,
              const std::vector<double>& embed_table, uint64_t init_seed);

    const DdqnConfig& config() const { return cfg_; }
    QNetwork& online() { return online_; }
    const QNetwork& online() const { return online_; }
    QNetwork& target() { return target_; }

    std::vector<double> q_values(const corpus::EncodedSequence& state) const {
        return online_.forward(state);
    }

    // epsilon from the schedule at the current collection step
    int act(const corpus::EncodedSequence& state, Rng& rng);
    // greedy action (evaluation rollouts run with epsilon = 0)
    int act_greedy(const corpus::EncodedSequence& state) const;

    double current_epsilon() const { return cfg_.epsilon.value(env_steps_); }
    void note_env_step() { ++env_steps_; }

    // one importance-weighted squared-TD gradient step on a replay sample;
    // hard-copies online into target every target_sync_interval steps
    TrainStepStats train_step(PrioritizedReplay& replay, Rng& rng);

    void sync_target();

    int64_t train_steps() const { return train_steps_; }
    int64_t env_steps() const { return env_steps_; }

    void save(const std::string& path, const std::map<std::string, std::string>& extra_meta = {}) const;
    static DdqnAgent load(const std::string& path,
                          std::map<std::string, std::string>* meta_out = nullptr);

private:
    DdqnConfig cfg_;
    QNetwork online_;
    QNetwork target_;
    int64_t train_steps_ = 0;
    int64_t env_steps_ = 0;
};

}  // namespace rlfuzz::ddqn
