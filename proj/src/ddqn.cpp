#include "rlfuzz/ddqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rlfuzz::ddqn {

void validate(const DdqnConfig& cfg, int) {
    if (cfg.convs.empty()) throw std::invalid_argument("ddqn config: no conv layers");
    int t = cfg.state_window;
    for (const auto& c : cfg.convs) {
        if (c.kernel < 1 || c.stride < 1 || c.filters < 1)
            throw std::invalid_argument("ddqn config: conv kernel/stride/filters must be positive");
        if (t < c.kernel)
            throw std::invalid_argument("ddqn config: state_window too small for the conv stack");
        t = (t - c.kernel) / c.stride + 1;
    }
    if (cfg.dense.empty()) throw std::invalid_argument("ddqn config: no dense layers");
    for (int d : cfg.dense)
        if (d < 1) throw std::invalid_argument("ddqn config: dense sizes must be positive");
    if (cfg.gamma < 0.0 || cfg.gamma > 1.0) throw std::invalid_argument("ddqn config: gamma outside [0,1]");
    if (cfg.state_window < 1) throw std::invalid_argument("ddqn config: state_window must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("ddqn config: batch_size must be positive");
    if (cfg.per_alpha < 0.0) throw std::invalid_argument("ddqn config: per_alpha must be nonnegative");
    if (cfg.replay_capacity < 1) throw std::invalid_argument("ddqn config: replay_capacity must be positive");
    if (cfg.target_sync_interval < 1)
        throw std::invalid_argument("ddqn config: target_sync_interval must be positive");
}

std::vector<DdqnConfig> presets() {
    auto make = [](const char* name, std::vector<ConvSpec> convs, std::vector<int> dense) {
        DdqnConfig c;
        c.name = name;
        c.convs = std::move(convs);
        c.dense = std::move(dense);
        return c;
    };
    return {
        make("C1", {{8, 2, 8}, {4, 2, 16}, {3, 1, 32}, {3, 1, 64}}, {128, 128, 128, 64}),
        make("C2", {{8, 2, 16}, {4, 2, 32}, {3, 1, 64}, {3, 1, 64}}, {128, 128, 128, 64}),
        make("C3", {{8, 2, 16}, {4, 2, 32}, {3, 1, 64}, {3, 1, 64}}, {128, 128, 128, 128}),
        make("C4", {{8, 2, 32}, {4, 2, 64}, {3, 1, 64}, {3, 1, 64}}, {256, 256}),
    };
}

DdqnConfig preset(const std::string& name) {
    for (auto& c : presets())
        if (c.name == name) return c;
    throw std::invalid_argument("unknown ddqn preset: " + name);
}

KvConfig config_to_kv(const DdqnConfig& cfg) {
    KvConfig kv;
    kv.set("name", cfg.name);
    std::vector<int> kernels, strides, filters;
    for (const auto& c : cfg.convs) {
        kernels.push_back(c.kernel);
        strides.push_back(c.stride);
        filters.push_back(c.filters);
    }
    kv.set_int_list("conv_kernels", kernels);
    kv.set_int_list("conv_strides", strides);
    kv.set_int_list("conv_filters", filters);
    kv.set_int_list("dense", cfg.dense);
    kv.set_double("learning_rate", cfg.learning_rate);
    kv.set_double("gamma", cfg.gamma);
    kv.set_int("target_sync_interval", cfg.target_sync_interval);
    kv.set_int("state_window", cfg.state_window);
    kv.set_double("epsilon_start", cfg.epsilon.start);
    kv.set_double("epsilon_end", cfg.epsilon.end);
    kv.set_int("epsilon_decay_steps", cfg.epsilon.decay_steps);
    kv.set_int("batch_size", cfg.batch_size);
    kv.set_int("huber", cfg.huber ? 1 : 0);
    kv.set_double("per_alpha", cfg.per_alpha);
    kv.set_double("per_beta_start", cfg.per_beta_start);
    kv.set_double("per_beta_end", cfg.per_beta_end);
    kv.set_int("per_beta_steps", cfg.per_beta_steps);
    kv.set_double("per_epsilon", cfg.per_epsilon);
    kv.set_int("replay_capacity", cfg.replay_capacity);
    return kv;
}

DdqnConfig config_from_kv(const KvConfig& kv) {
    DdqnConfig dflt;
    DdqnConfig cfg;
    cfg.name = kv.get_or("name", "custom");
    if (kv.has("conv_kernels")) {
        auto kernels = kv.get_int_list("conv_kernels");
        auto strides = kv.get_int_list("conv_strides");
        auto filters = kv.get_int_list("conv_filters");
        if (kernels.size() != strides.size() || kernels.size() != filters.size())
            throw ConfigError("ddqn config: conv_kernels/strides/filters lengths differ");
        cfg.convs.clear();
        for (size_t i = 0; i < kernels.size(); ++i)
            cfg.convs.push_back({kernels[i], strides[i], filters[i]});
    }
    cfg.dense = kv.has("dense") ? kv.get_int_list("dense") : dflt.dense;
    cfg.learning_rate = kv.get_double_or("learning_rate", dflt.learning_rate);
    cfg.gamma = kv.get_double_or("gamma", dflt.gamma);
    cfg.target_sync_interval = kv.get_int_or("target_sync_interval", dflt.target_sync_interval);
    cfg.state_window = int(kv.get_int_or("state_window", dflt.state_window));
    cfg.epsilon.start = kv.get_double_or("epsilon_start", dflt.epsilon.start);
    cfg.epsilon.end = kv.get_double_or("epsilon_end", dflt.epsilon.end);
    cfg.epsilon.decay_steps = kv.get_int_or("epsilon_decay_steps", dflt.epsilon.decay_steps);
    cfg.batch_size = int(kv.get_int_or("batch_size", dflt.batch_size));
    cfg.huber = kv.get_int_or("huber", 0) != 0;
    cfg.per_alpha = kv.get_double_or("per_alpha", dflt.per_alpha);
    cfg.per_beta_start = kv.get_double_or("per_beta_start", dflt.per_beta_start);
    cfg.per_beta_end = kv.get_double_or("per_beta_end", dflt.per_beta_end);
    cfg.per_beta_steps = kv.get_int_or("per_beta_steps", dflt.per_beta_steps);
    cfg.per_epsilon = kv.get_double_or("per_epsilon", dflt.per_epsilon);
    cfg.replay_capacity = kv.get_int_or("replay_capacity", dflt.replay_capacity);
    auto unknown = kv.unknown_keys(
        {"name", "conv_kernels", "conv_strides", "conv_filters", "dense", "learning_rate",
         "gamma", "target_sync_interval", "state_window", "epsilon_start", "epsilon_end",
         "epsilon_decay_steps", "batch_size", "huber", "per_alpha", "per_beta_start",
         "per_beta_end", "per_beta_steps", "per_epsilon", "replay_capacity"});
    if (!unknown.empty()) throw ConfigError("ddqn config: unknown key '" + unknown[0] + "'");
    return cfg;
}

int select_action(const std::vector<double>& q, double epsilon, Rng& rng) {
    if (q.empty()) throw std::invalid_argument("select_action: empty Q vector");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("select_action: epsilon outside [0,1]");
    if (epsilon > 0.0 && rng.uniform01() < epsilon) return int(rng.uniform(q.size()));
    int best = 0;
    for (size_t i = 1; i < q.size(); ++i)
        if (q[i] > q[size_t(best)]) best = int(i);
    return best;
}

std::vector<double> double_q_target(const std::vector<Experience>& batch, const QFn& online,
                                    const QFn& target, double gamma) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const auto& exp : batch) {
        if (exp.terminal) {
            y.push_back(exp.reward);
            continue;
        }
        std::vector<double> q_online = online(exp.next_state);
        std::vector<double> q_target = target(exp.next_state);
        if (q_online.size() != q_target.size())
            throw std::logic_error("double_q_target: online/target output sizes differ");
        int best = 0;
        for (size_t a = 1; a < q_online.size(); ++a)
            if (q_online[a] > q_online[size_t(best)]) best = int(a);
        y.push_back(exp.reward + gamma * q_target[size_t(best)]);
    }
    return y;
}

// ---- prioritized replay ----

PrioritizedReplay::PrioritizedReplay(size_t capacity, double alpha, double eps_p)
    : capacity_(capacity), alpha_(alpha), eps_p_(eps_p) {
    if (capacity_ == 0) throw std::invalid_argument("replay: capacity must be positive");
    items_.resize(capacity_);
    priorities_.assign(capacity_, 0.0);
    tree_base_ = 1;
    while (tree_base_ < capacity_) tree_base_ <<= 1;
    sum_tree_.assign(2 * tree_base_, 0.0);
    min_tree_.assign(2 * tree_base_, std::numeric_limits<double>::infinity());
}

void PrioritizedReplay::tree_set(size_t index, double p_alpha) {
    size_t i = tree_base_ + index;
    sum_tree_[i] = p_alpha;
    min_tree_[i] = p_alpha;
    for (i >>= 1; i >= 1; i >>= 1) {
        sum_tree_[i] = sum_tree_[2 * i] + sum_tree_[2 * i + 1];
        min_tree_[i] = std::min(min_tree_[2 * i], min_tree_[2 * i + 1]);
        if (i == 1) break;
    }
}

size_t PrioritizedReplay::insert(Experience exp) {
    size_t slot = next_slot_;
    items_[slot] = std::move(exp);
    priorities_[slot] = max_priority_;
    tree_set(slot, std::pow(max_priority_, alpha_));
    next_slot_ = (next_slot_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
    return slot;
}

PrioritizedReplay::Batch PrioritizedReplay::sample(size_t batch_size, double beta, Rng& rng) const {
    if (size_ == 0) throw std::runtime_error("replay: sampling from empty memory");
    double total = sum_tree_[1];
    if (!(total > 0.0)) throw std::runtime_error("replay: no sampling mass");

    double min_p = min_tree_[1] / total;
    double max_weight = std::pow(double(size_) * min_p, -beta);

    Batch batch;
    batch.indices.reserve(batch_size);
    batch.items.reserve(batch_size);
    batch.weights.reserve(batch_size);
    for (size_t i = 0; i < batch_size; ++i) {
        double u = rng.uniform01() * total;
        size_t node = 1;
        while (node < tree_base_) {
            if (u < sum_tree_[2 * node]) {
                node = 2 * node;
            } else {
                u -= sum_tree_[2 * node];
                node = 2 * node + 1;
            }
        }
        size_t slot = node - tree_base_;
        if (slot >= size_) slot = size_ - 1;  // numeric edge at the boundary
        double prob = sum_tree_[node] / total;
        double w = std::pow(double(size_) * prob, -beta) / max_weight;
        batch.indices.push_back(slot);
        batch.items.push_back(items_[slot]);
        batch.weights.push_back(w);
    }
    return batch;
}

void PrioritizedReplay::update_priorities(const std::vector<size_t>& indices,
                                          const std::vector<double>& td_errors) {
    if (indices.size() != td_errors.size())
        throw std::invalid_argument("replay: indices/td_errors size mismatch");
    for (size_t i = 0; i < indices.size(); ++i) {
        size_t slot = indices[i];
        if (slot >= size_) throw std::out_of_range("replay: priority index out of range");
        double p = std::abs(td_errors[i]) + eps_p_;
        priorities_[slot] = p;
        max_priority_ = std::max(max_priority_, p);
        tree_set(slot, std::pow(p, alpha_));
    }
}

double PrioritizedReplay::priority(size_t index) const {
    if (index >= size_) throw std::out_of_range("replay: index out of range");
    return priorities_[index];
}

double PrioritizedReplay::sample_probability(size_t index) const {
    if (index >= size_) throw std::out_of_range("replay: index out of range");
    return sum_tree_[tree_base_ + index] / sum_tree_[1];
}

}  // namespace rlfuzz::ddqn
