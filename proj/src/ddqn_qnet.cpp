#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rlfuzz/checkpoint.hpp"
#include "rlfuzz/ddqn.hpp"

namespace rlfuzz::ddqn {

QNetwork::QNetwork(const DdqnConfig& cfg, int n_actions, int vocab_size, int embed_dim,
                   const std::vector<double>& embed_table, uint64_t init_seed)
    : cfg_(cfg), n_actions_(n_actions), vocab_size_(vocab_size), embed_dim_(embed_dim) {
    validate(cfg_);
    if (n_actions_ < 1) throw std::invalid_argument("q network: need at least one action");
    if (embed_table.size() != size_t(vocab_size) * size_t(embed_dim))
        throw std::invalid_argument("q network: embedding table size mismatch");

    Rng rng(init_seed);

    embed_ = &params_.add("embed", {vocab_size, embed_dim});
    embed_->w = embed_table;
    embed_->trainable = false;  // pre-trained from the generator, frozen

    int channels = embed_dim;
    int t = cfg_.state_window;
    for (size_t i = 0; i < cfg_.convs.size(); ++i) {
        const ConvSpec& spec = cfg_.convs[i];
        ConvParams cp;
        cp.spec = spec;
        std::string base = "conv" + std::to_string(i);
        cp.w = &params_.add(base + ".w", {spec.filters, channels, spec.kernel});
        cp.b = &params_.add(base + ".b", {spec.filters});
        init_he(*cp.w, channels * spec.kernel, rng);
        convs_.push_back(cp);
        channels = spec.filters;
        t = (t - spec.kernel) / spec.stride + 1;
    }

    int flat = channels * t;
    int in_dim = flat;
    for (size_t i = 0; i < cfg_.dense.size(); ++i) {
        DenseParams dp;
        std::string base = "dense" + std::to_string(i);
        dp.w = &params_.add(base + ".w", {cfg_.dense[i], in_dim});
        dp.b = &params_.add(base + ".b", {cfg_.dense[i]});
        init_he(*dp.w, in_dim, rng);
        denses_.push_back(dp);
        in_dim = cfg_.dense[i];
    }

    out_w_ = &params_.add("out.w", {n_actions_, in_dim});
    out_b_ = &params_.add("out.b", {n_actions_});
    init_zero(*out_w_);
    init_zero(*out_b_);
}

corpus::EncodedSequence QNetwork::window_state(const corpus::EncodedSequence& state) const {
    size_t W = size_t(cfg_.state_window);
    corpus::EncodedSequence out(W, 0);
    size_t n = std::min(state.size(), W);
    // latest n ids, right-aligned; the left side stays padded with id 0
    for (size_t i = 0; i < n; ++i) out[W - n + i] = state[state.size() - n + i];
    return out;
}

struct QNetwork::Acts {
    corpus::EncodedSequence ids;
    nn::Mat embed_out;
    std::vector<nn::Mat> conv_outs;  // post-relu
    std::vector<double> flat;
    std::vector<std::vector<double>> dense_outs;  // post-relu
    std::vector<double> q;
};

void QNetwork::forward_impl(const corpus::EncodedSequence& state, Acts& acts) const {
    acts.ids = window_state(state);
    for (int id : acts.ids)
        if (id < 0 || id >= vocab_size_)
            throw std::invalid_argument("q network: id outside vocabulary range");

    nn::embedding_fwd(*embed_, acts.ids, embed_dim_, acts.embed_out);

    acts.conv_outs.resize(convs_.size());
    const nn::Mat* cur = &acts.embed_out;
    for (size_t i = 0; i < convs_.size(); ++i) {
        nn::strided_conv_fwd(*cur, acts.conv_outs[i], *convs_[i].w, *convs_[i].b,
                             convs_[i].spec.kernel, convs_[i].spec.stride);
        nn::relu_fwd(acts.conv_outs[i]);
        cur = &acts.conv_outs[i];
    }

    acts.flat.assign(cur->v.begin(), cur->v.end());

    acts.dense_outs.resize(denses_.size());
    const std::vector<double>* vcur = &acts.flat;
    for (size_t i = 0; i < denses_.size(); ++i) {
        nn::dense_fwd(*vcur, acts.dense_outs[i], *denses_[i].w, *denses_[i].b);
        for (auto& x : acts.dense_outs[i])
            if (x < 0.0) x = 0.0;
        vcur = &acts.dense_outs[i];
    }

    nn::dense_fwd(*vcur, acts.q, *out_w_, *out_b_);
}

std::vector<double> QNetwork::forward(const corpus::EncodedSequence& state) const {
    Acts acts;
    forward_impl(state, acts);
    return std::move(acts.q);
}

std::vector<double> QNetwork::forward_backward(const corpus::EncodedSequence& state,
                                               const std::vector<double>& dq) {
    Acts acts;
    forward_impl(state, acts);
    if (dq.size() != acts.q.size()) throw std::logic_error("forward_backward: dq size mismatch");

    std::vector<double> g = dq, g_prev;
    const std::vector<double>& last_dense = denses_.empty() ? acts.flat : acts.dense_outs.back();
    nn::dense_bwd(last_dense, g, &g_prev, *out_w_, *out_b_);

    for (size_t ri = denses_.size(); ri-- > 0;) {
        // relu mask on the dense output
        for (size_t j = 0; j < g_prev.size(); ++j)
            if (acts.dense_outs[ri][j] <= 0.0) g_prev[j] = 0.0;
        const std::vector<double>& in = ri == 0 ? acts.flat : acts.dense_outs[ri - 1];
        nn::dense_bwd(in, g_prev, &g, *denses_[ri].w, *denses_[ri].b);
        std::swap(g, g_prev);
    }

    // g_prev carries the gradient at the flattened conv output
    nn::Mat gm(acts.conv_outs.back().rows, acts.conv_outs.back().cols);
    gm.v = g_prev;
    nn::Mat gin;
    for (size_t ri = convs_.size(); ri-- > 0;) {
        nn::relu_bwd(acts.conv_outs[ri], gm);
        const nn::Mat& in = ri == 0 ? acts.embed_out : acts.conv_outs[ri - 1];
        // the embedding is frozen: no need to push gradients below conv0
        nn::strided_conv_bwd(in, gm, ri == 0 ? nullptr : &gin, *convs_[ri].w, *convs_[ri].b,
                             convs_[ri].spec.kernel, convs_[ri].spec.stride);
        if (ri) std::swap(gm, gin);
    }
    return std::move(acts.q);
}

// ---- agent ----

DdqnAgent::DdqnAgent(const DdqnConfig& cfg, int n_actions, int vocab_size, int embed_dim,
                     const std::vector<double>& embed_table, uint64_t init_seed)
    : cfg_(cfg),
      online_(cfg, n_actions, vocab_size, embed_dim, embed_table, init_seed),
      target_(cfg, n_actions, vocab_size, embed_dim, embed_table, init_seed) {
    target_.params().copy_values_from(online_.params());
}

int DdqnAgent::act(const corpus::EncodedSequence& state, Rng& rng) {
    return select_action(online_.forward(state), current_epsilon(), rng);
}

int DdqnAgent::act_greedy(const corpus::EncodedSequence& state) const {
    Rng rng(0);
    return select_action(online_.forward(state), 0.0, rng);
}

void DdqnAgent::sync_target() { target_.params().copy_values_from(online_.params()); }

TrainStepStats DdqnAgent::train_step(PrioritizedReplay& replay, Rng& rng) {
    size_t batch_size = size_t(cfg_.batch_size);
    if (replay.size() < batch_size)
        throw std::runtime_error("train_step: replay holds fewer entries than the batch size");

    double beta = cfg_.per_beta_start +
                  (cfg_.per_beta_end - cfg_.per_beta_start) *
                      std::min(1.0, double(train_steps_) / double(std::max<int64_t>(1, cfg_.per_beta_steps)));
    auto batch = replay.sample(batch_size, beta, rng);

    auto targets = double_q_target(
        batch.items, [this](const corpus::EncodedSequence& s) { return online_.forward(s); },
        [this](const corpus::EncodedSequence& s) { return target_.forward(s); }, cfg_.gamma);

    TrainStepStats stats;
    online_.params().zero_grad();
    std::vector<double> td_errors(batch.items.size());
    double loss_sum = 0.0;
    for (size_t i = 0; i < batch.items.size(); ++i) {
        const Experience& exp = batch.items[i];
        std::vector<double> q = online_.forward(exp.state);
        double td = q[size_t(exp.action)] - targets[i];
        td_errors[i] = td;

        double w = batch.weights[i] / double(batch.items.size());
        double dq_a;
        if (cfg_.huber) {
            // huber with delta 1
            loss_sum += batch.weights[i] * (std::abs(td) <= 1.0 ? 0.5 * td * td : std::abs(td) - 0.5);
            dq_a = w * std::clamp(td, -1.0, 1.0);
        } else {
            loss_sum += batch.weights[i] * td * td;
            dq_a = w * 2.0 * td;
        }

        std::vector<double> dq(q.size(), 0.0);
        dq[size_t(exp.action)] = dq_a;
        online_.forward_backward(exp.state, dq);
        stats.mean_abs_td += std::abs(td);
    }
    double loss = loss_sum / double(batch.items.size());
    if (std::isnan(loss) || std::isinf(loss))
        throw std::runtime_error("train_step: loss is not finite (diverged)");

    online_.params().adam_step(cfg_.learning_rate);
    replay.update_priorities(batch.indices, td_errors);

    ++train_steps_;
    stats.loss = loss;
    stats.mean_abs_td /= double(batch.items.size());
    if (train_steps_ % cfg_.target_sync_interval == 0) {
        sync_target();
        stats.synced_target = true;
    }
    return stats;
}

void DdqnAgent::save(const std::string& path,
                     const std::map<std::string, std::string>& extra_meta) const {
    nn::Checkpoint ck;
    ck.kind = "ddqn";
    ck.meta["config"] = config_to_kv(cfg_).dump();
    ck.meta["n_actions"] = std::to_string(online_.n_actions());
    ck.meta["vocab_size"] = std::to_string(online_.vocab_size());
    ck.meta["embed_dim"] = std::to_string(online_.embed_dim());
    ck.meta["train_steps"] = std::to_string(train_steps_);
    ck.meta["env_steps"] = std::to_string(env_steps_);
    char eps[32];
    std::snprintf(eps, sizeof eps, "%.9f", current_epsilon());
    ck.meta["epsilon"] = eps;
    for (const auto& [k, v] : extra_meta) ck.meta[k] = v;
    ck.put_params(online_.params());
    for (const nn::Param* p : target_.params().params()) {
        nn::Checkpoint::Array a;
        a.name = "target/" + p->name;
        a.shape = p->shape;
        a.data = p->w;
        ck.arrays.push_back(std::move(a));
    }
    ck.save(path);
}

DdqnAgent DdqnAgent::load(const std::string& path, std::map<std::string, std::string>* meta_out) {
    nn::Checkpoint ck = nn::Checkpoint::load(path);
    if (ck.kind != "ddqn") throw nn::CheckpointError("not a ddqn checkpoint: " + path);
    DdqnConfig cfg = config_from_kv(KvConfig::parse(ck.meta.at("config")));
    int n_actions = std::stoi(ck.meta.at("n_actions"));
    int vocab_size = std::stoi(ck.meta.at("vocab_size"));
    int embed_dim = std::stoi(ck.meta.at("embed_dim"));

    std::vector<double> embed_table(size_t(vocab_size) * size_t(embed_dim), 0.0);
    DdqnAgent agent(cfg, n_actions, vocab_size, embed_dim, embed_table, 0);
    ck.restore_params(agent.online_.params());
    for (nn::Param* p : agent.target_.params().params()) {
        bool found = false;
        for (const auto& a : ck.arrays)
            if (a.name == "target/" + p->name) {
                if (a.data.size() != p->w.size())
                    throw nn::CheckpointError("checkpoint parameter size mismatch: " + a.name);
                p->w = a.data;
                found = true;
                break;
            }
        if (!found) p->w = agent.online_.params().find(p->name)->w;
    }
    agent.train_steps_ = std::stoll(ck.meta.at("train_steps"));
    agent.env_steps_ = std::stoll(ck.meta.at("env_steps"));
    if (meta_out) *meta_out = ck.meta;
    return agent;
}

}  // namespace rlfuzz::ddqn
