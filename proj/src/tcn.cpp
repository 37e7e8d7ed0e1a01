#include "rlfuzz/tcn.hpp"

#include <cmath>

#include "rlfuzz/checkpoint.hpp"

namespace rlfuzz::tcn {

int receptive_field(const TcnConfig& cfg) {
    int rf = 1;
    for (int d : cfg.dilations) rf += 2 * (cfg.kernel_size - 1) * d;
    return rf;
}

void validate(const TcnConfig& cfg) {
    if (cfg.kernel_size < 1) throw std::invalid_argument("tcn config: kernel_size must be >= 1");
    if (cfg.dilations.empty()) throw std::invalid_argument("tcn config: no dilations");
    int expect = 1;
    for (int d : cfg.dilations) {
        if (d != expect)
            throw std::invalid_argument(
                "tcn config: dilations must be increasing powers of two starting at 1");
        expect *= 2;
    }
    if (cfg.dense1 < 1 || cfg.dense2 < 1) throw std::invalid_argument("tcn config: dense sizes must be positive");
    if (cfg.embed_dim < 1) throw std::invalid_argument("tcn config: embed_dim must be positive");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw std::invalid_argument("tcn config: dropout outside [0,1)");
    if (cfg.max_seq_len < 1) throw std::invalid_argument("tcn config: max_seq_len must be positive");
}

std::vector<TcnConfig> presets() {
    auto make = [](const char* name, int k, int n_dil, int dense1, int dense2) {
        TcnConfig c;
        c.name = name;
        c.kernel_size = k;
        c.dilations.clear();
        for (int i = 0, d = 1; i < n_dil; ++i, d *= 2) c.dilations.push_back(d);
        c.dense1 = dense1;
        c.dense2 = dense2;
        return c;
    };
    return {
        make("cfg01", 3, 7, 512, 256), make("cfg02", 3, 7, 1024, 512),
        make("cfg03", 5, 6, 512, 256), make("cfg04", 5, 6, 1024, 512),
        make("cfg05", 9, 5, 512, 256), make("cfg06", 9, 5, 1024, 512),
        make("cfg07", 18, 4, 512, 256), make("cfg08", 18, 4, 1024, 512),
    };
}

TcnConfig preset(const std::string& name) {
    for (auto& c : presets())
        if (c.name == name) return c;
    throw std::invalid_argument("unknown tcn preset: " + name);
}

KvConfig config_to_kv(const TcnConfig& cfg) {
    KvConfig kv;
    kv.set("name", cfg.name);
    kv.set_int("kernel_size", cfg.kernel_size);
    kv.set_int_list("dilations", cfg.dilations);
    kv.set_int("dense1", cfg.dense1);
    kv.set_int("dense2", cfg.dense2);
    kv.set_int("embed_dim", cfg.embed_dim);
    kv.set_double("dropout", cfg.dropout);
    kv.set_int("vocab_size", cfg.vocab_size);
    kv.set_int("max_seq_len", cfg.max_seq_len);
    kv.set_double("learning_rate", cfg.learning_rate);
    kv.set_int("batch_size", cfg.batch_size);
    return kv;
}

TcnConfig config_from_kv(const KvConfig& kv) {
    TcnConfig dflt;
    TcnConfig cfg;
    cfg.name = kv.get_or("name", "custom");
    cfg.kernel_size = int(kv.get_int_or("kernel_size", dflt.kernel_size));
    cfg.dilations = kv.has("dilations") ? kv.get_int_list("dilations") : dflt.dilations;
    cfg.dense1 = int(kv.get_int_or("dense1", dflt.dense1));
    cfg.dense2 = int(kv.get_int_or("dense2", dflt.dense2));
    cfg.embed_dim = int(kv.get_int_or("embed_dim", dflt.embed_dim));
    cfg.dropout = kv.get_double_or("dropout", dflt.dropout);
    cfg.vocab_size = int(kv.get_int_or("vocab_size", 0));
    cfg.max_seq_len = int(kv.get_int_or("max_seq_len", dflt.max_seq_len));
    cfg.learning_rate = kv.get_double_or("learning_rate", dflt.learning_rate);
    cfg.batch_size = int(kv.get_int_or("batch_size", dflt.batch_size));
    auto unknown = kv.unknown_keys({"name", "kernel_size", "dilations", "dense1", "dense2",
                                    "embed_dim", "dropout", "vocab_size", "max_seq_len",
                                    "learning_rate", "batch_size"});
    if (!unknown.empty()) throw ConfigError("tcn config: unknown key '" + unknown[0] + "'");
    return cfg;
}

// ---- model ----

TcnModel::TcnModel(TcnConfig cfg, uint64_t init_seed) : cfg_(std::move(cfg)) {
    validate(cfg_);
    if (cfg_.vocab_size < 1) throw std::invalid_argument("tcn model: vocab_size not set");

    Rng rng(init_seed);
    int E = cfg_.embed_dim;
    int V = cfg_.vocab_size;
    int k = cfg_.kernel_size;

    embed_ = &params_.add("embed", {V, E});
    init_uniform(*embed_, -0.1, 0.1, rng);

    // residual branches are He-initialized but scaled down with depth, so
    // the stacked blocks stay stable at high learning rates while still
    // mixing context from the first step
    double branch_scale = 1.0 / std::sqrt(2.0 * double(cfg_.dilations.size()));
    for (size_t i = 0; i < cfg_.dilations.size(); ++i) {
        BlockParams bp;
        bp.dilation = cfg_.dilations[i];
        std::string base = "block" + std::to_string(i);
        bp.w1 = &params_.add(base + ".conv1.w", {E, E, k});
        bp.b1 = &params_.add(base + ".conv1.b", {E});
        bp.w2 = &params_.add(base + ".conv2.w", {E, E, k});
        bp.b2 = &params_.add(base + ".conv2.b", {E});
        init_he(*bp.w1, E * k, rng);
        init_he(*bp.w2, E * k, rng);
        for (auto& v : bp.w2->w) v *= branch_scale;
        blocks_.push_back(bp);
    }

    dense1_w_ = &params_.add("dense1.w", {cfg_.dense1, E, 1});
    dense1_b_ = &params_.add("dense1.b", {cfg_.dense1});
    dense2_w_ = &params_.add("dense2.w", {cfg_.dense2, cfg_.dense1, 1});
    dense2_b_ = &params_.add("dense2.b", {cfg_.dense2});
    out_w_ = &params_.add("out.w", {V, cfg_.dense2, 1});
    out_b_ = &params_.add("out.b", {V});
    init_he(*dense1_w_, E, rng);
    init_he(*dense2_w_, cfg_.dense1, rng);
    // zero-initialized output layer: an untrained model emits the uniform
    // distribution over characters
    init_zero(*out_w_);
    init_zero(*out_b_);
}

struct TcnModel::Acts {
    corpus::EncodedSequence ids;
    nn::Mat embed_out;
    struct BlockActs {
        nn::Mat conv1_out;  // after relu, before dropout
        nn::Mat a1;         // after dropout, input to conv2
        nn::Mat mask1;
        nn::Mat conv2_out;  // after relu, before dropout
        nn::Mat a2;         // after dropout
        nn::Mat mask2;
        nn::Mat out;        // relu(in + a2)
    };
    std::vector<BlockActs> blocks;
    nn::Mat d1_out;  // after relu
    nn::Mat d2_out;  // after relu
    nn::Mat logits;
};

void TcnModel::forward_impl(const corpus::EncodedSequence& ids, bool train, Rng* rng,
                            Acts& acts) const {
    if (int(ids.size()) > cfg_.max_seq_len)
        throw std::invalid_argument("tcn forward: sequence longer than max_seq_len");
    for (int id : ids)
        if (id < 0 || id >= cfg_.vocab_size)
            throw std::invalid_argument("tcn forward: id outside vocabulary range");

    acts.ids = ids;
    nn::embedding_fwd(*embed_, ids, cfg_.embed_dim, acts.embed_out);

    acts.blocks.resize(blocks_.size());
    const nn::Mat* cur = &acts.embed_out;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const BlockParams& bp = blocks_[i];
        auto& ba = acts.blocks[i];

        nn::causal_conv_fwd(*cur, ba.conv1_out, *bp.w1, *bp.b1, cfg_.kernel_size, bp.dilation);
        nn::relu_fwd(ba.conv1_out);
        ba.a1 = ba.conv1_out;
        if (train) nn::dropout_fwd(ba.a1, cfg_.dropout, *rng, ba.mask1);

        nn::causal_conv_fwd(ba.a1, ba.conv2_out, *bp.w2, *bp.b2, cfg_.kernel_size, bp.dilation);
        nn::relu_fwd(ba.conv2_out);
        ba.a2 = ba.conv2_out;
        if (train) nn::dropout_fwd(ba.a2, cfg_.dropout, *rng, ba.mask2);

        ba.out = ba.a2;
        for (size_t j = 0; j < ba.out.v.size(); ++j) ba.out.v[j] += cur->v[j];
        nn::relu_fwd(ba.out);
        cur = &ba.out;
    }

    nn::causal_conv_fwd(*cur, acts.d1_out, *dense1_w_, *dense1_b_, 1, 1);
    nn::relu_fwd(acts.d1_out);
    nn::causal_conv_fwd(acts.d1_out, acts.d2_out, *dense2_w_, *dense2_b_, 1, 1);
    nn::relu_fwd(acts.d2_out);
    nn::causal_conv_fwd(acts.d2_out, acts.logits, *out_w_, *out_b_, 1, 1);
}

nn::Mat TcnModel::forward(const corpus::EncodedSequence& ids, bool train, Rng* rng) const {
    Acts acts;
    forward_impl(ids, train, rng, acts);
    return std::move(acts.logits);
}

void TcnModel::backward_impl(Acts& acts, const nn::Mat& dlogits) {
    nn::Mat g = dlogits;
    nn::Mat g_prev;

    const nn::Mat& blocks_out = blocks_.empty() ? acts.embed_out : acts.blocks.back().out;

    nn::causal_conv_bwd(acts.d2_out, g, &g_prev, *out_w_, *out_b_, 1, 1);
    nn::relu_bwd(acts.d2_out, g_prev);
    nn::causal_conv_bwd(acts.d1_out, g_prev, &g, *dense2_w_, *dense2_b_, 1, 1);
    nn::relu_bwd(acts.d1_out, g);
    nn::causal_conv_bwd(blocks_out, g, &g_prev, *dense1_w_, *dense1_b_, 1, 1);

    // g_prev now carries the gradient at the top block's output
    for (size_t ri = blocks_.size(); ri-- > 0;) {
        const BlockParams& bp = blocks_[ri];
        auto& ba = acts.blocks[ri];
        const nn::Mat& block_in = ri == 0 ? acts.embed_out : acts.blocks[ri - 1].out;

        nn::relu_bwd(ba.out, g_prev);
        nn::Mat g_skip = g_prev;  // identity shortcut

        if (ba.mask2.rows) nn::dropout_bwd(g_prev, ba.mask2);
        nn::relu_bwd(ba.conv2_out, g_prev);
        nn::causal_conv_bwd(ba.a1, g_prev, &g, *bp.w2, *bp.b2, cfg_.kernel_size, bp.dilation);

        if (ba.mask1.rows) nn::dropout_bwd(g, ba.mask1);
        nn::relu_bwd(ba.conv1_out, g);
        nn::causal_conv_bwd(block_in, g, &g_prev, *bp.w1, *bp.b1, cfg_.kernel_size, bp.dilation);

        for (size_t j = 0; j < g_prev.v.size(); ++j) g_prev.v[j] += g_skip.v[j];
    }

    nn::embedding_bwd(*embed_, acts.ids, g_prev);
}

double TcnModel::forward_backward(const std::vector<const corpus::Window*>& batch, Rng& rng) {
    if (batch.empty()) throw std::invalid_argument("forward_backward: empty batch");
    size_t total_positions = 0;
    for (const auto* w : batch) total_positions += w->input.size();

    double loss_sum = 0.0;
    Acts acts;
    nn::Mat dlogits;
    for (const corpus::Window* w : batch) {
        forward_impl(w->input, cfg_.dropout > 0.0, &rng, acts);
        loss_sum += nn::softmax_xent(acts.logits, w->target, &dlogits, 1.0 / double(total_positions));
        backward_impl(acts, dlogits);
    }
    return loss_sum / double(total_positions);
}

double TcnModel::mean_loss(const std::vector<corpus::Window>& windows) const {
    if (windows.empty()) return 0.0;
    size_t total_positions = 0;
    double loss_sum = 0.0;
    Acts acts;
    for (const auto& w : windows) {
        forward_impl(w.input, false, nullptr, acts);
        loss_sum += nn::softmax_xent(acts.logits, w.target, nullptr, 0.0);
        total_positions += w.input.size();
    }
    return loss_sum / double(total_positions);
}

std::vector<std::vector<double>> TcnModel::snapshot_values() const {
    std::vector<std::vector<double>> snap;
    for (const nn::Param* p : params_.params()) snap.push_back(p->w);
    return snap;
}

void TcnModel::restore_values(const std::vector<std::vector<double>>& snap) {
    auto ps = params_.params();
    if (snap.size() != ps.size()) throw std::logic_error("restore_values: structure mismatch");
    for (size_t i = 0; i < ps.size(); ++i) ps[i]->w = snap[i];
}

// ---- checkpoint io ----

void save_checkpoint(const TcnModel& model, const std::string& path,
                     const std::map<std::string, std::string>& extra_meta) {
    nn::Checkpoint ck;
    ck.kind = "tcn";
    ck.meta["config"] = config_to_kv(model.config()).dump();
    for (const auto& [k, v] : extra_meta) ck.meta[k] = v;
    ck.put_params(model.params());
    ck.save(path);
}

TcnModel load_checkpoint(const std::string& path, std::map<std::string, std::string>* meta_out) {
    nn::Checkpoint ck = nn::Checkpoint::load(path);
    if (ck.kind != "tcn") throw nn::CheckpointError("not a tcn checkpoint: " + path);
    TcnConfig cfg = config_from_kv(KvConfig::parse(ck.meta.at("config")));
    TcnModel model(cfg, 0);
    ck.restore_params(model.params());
    if (meta_out) *meta_out = ck.meta;
    return model;
}

}  // namespace rlfuzz::tcn
