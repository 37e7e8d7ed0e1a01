#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rlfuzz/corpus.hpp"
#include "rlfuzz/kvconfig.hpp"
#include "rlfuzz/nn.hpp"
#include "rlfuzz/rng.hpp"

namespace rlfuzz::tcn {

struct TcnConfig {
    std::string name = "custom";
    int kernel_size = 3;
    std::vector<int> dilations = {1, 2, 4, 8, 16, 32, 64};
    int dense1 = 512;
    int dense2 = 256;
    int embed_dim = 256;
    double dropout = 0.1;
    int vocab_size = 0;  // set from the vocabulary before building the model
    int max_seq_len = 250;
    double learning_rate = 1e-3;
    int batch_size = 16;
};

// 1 + sum over blocks of 2*(k-1)*d_i  (two dilated convolutions per block)
int receptive_field(const TcnConfig& cfg);

void validate(const TcnConfig& cfg);

// the eight published hyper-parameter rows, named cfg01..cfg08
std::vector<TcnConfig> presets();
TcnConfig preset(const std::string& name);

KvConfig config_to_kv(const TcnConfig& cfg);
TcnConfig config_from_kv(const KvConfig& kv);

class TcnModel {
public:
    TcnModel(TcnConfig cfg, uint64_t init_seed);

    const TcnConfig& config() const { return cfg_; }
    nn::ParamSet& params() { return params_; }
    const nn::ParamSet& params() const { return params_; }
    int n_blocks() const { return int(cfg_.dilations.size()); }

    // logits [vocab][T]; train mode applies dropout driven by rng
    nn::Mat forward(const corpus::EncodedSequence& ids, bool train = false,
                    Rng* rng = nullptr) const;

    // forward + cross-entropy + full backward over one batch of windows;
    // accumulates gradients and returns the mean per-position loss
    double forward_backward(const std::vector<const corpus::Window*>& batch, Rng& rng);

    double mean_loss(const std::vector<corpus::Window>& windows) const;

    // snapshot/restore of parameter values (best-epoch checkpointing)
    std::vector<std::vector<double>> snapshot_values() const;
    void restore_values(const std::vector<std::vector<double>>& snap);

private:
    friend class TcnSampler;
    struct Acts;
    void forward_impl(const corpus::EncodedSequence& ids, bool train, Rng* rng, Acts& acts) const;
    void backward_impl(Acts& acts, const nn::Mat& dlogits);

    TcnConfig cfg_;
    nn::ParamSet params_;
    nn::Param* embed_;
    struct BlockParams {
        nn::Param* w1;
        nn::Param* b1;
        nn::Param* w2;
        nn::Param* b2;
        int dilation;
    };
    std::vector<BlockParams> blocks_;
    nn::Param *dense1_w_, *dense1_b_, *dense2_w_, *dense2_b_, *out_w_, *out_b_;
};

// ---- training ----

struct TrainDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tracks the minimum validation loss; stop after `patience` consecutive
// epochs without improvement.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    // feeds one epoch's validation loss; returns true when training should stop
    bool observe(double val_loss);

    int best_epoch() const { return best_epoch_; }  // 1-based
    double best_loss() const { return best_loss_; }
    bool last_improved() const { return last_improved_; }

private:
    int patience_;
    int epochs_seen_ = 0;
    int best_epoch_ = 0;
    double best_loss_ = 0.0;
    int since_best_ = 0;
    bool last_improved_ = false;
};

struct TrainOptions {
    int max_epochs = 100;
    int patience = 5;
    uint64_t seed = 0;
    // training window extraction; 0 falls back to max_seq_len / non-overlapping
    int window_len = 0;
    int stride = 0;
    // early exit once the epoch training loss drops below this (0 disables)
    double stop_below_train_loss = 0.0;
    std::function<void(int epoch, double train_loss, double val_loss)> on_epoch;
};

struct EpochLoss {
    int epoch;  // 1-based
    double train_loss;
    double val_loss;
};

struct TrainResult {
    std::vector<EpochLoss> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
};

// Trains in place and restores the best-validation-loss state before
// returning. Throws TrainDivergence when the loss turns NaN.
TrainResult train(TcnModel& model, const corpus::DatasetSplit& split, const TrainOptions& opts);

std::string loss_history_csv(const TrainResult& result);

// ---- checkpoint io ----

void save_checkpoint(const TcnModel& model, const std::string& path,
                     const std::map<std::string, std::string>& extra_meta = {});
TcnModel load_checkpoint(const std::string& path,
                         std::map<std::string, std::string>* meta_out = nullptr);

// ---- sampling ----

// Autoregressive sampler with the sliding-window rule: the context never
// exceeds window_max characters; on reaching it, the context is cut back to
// the latest truncate_to characters and the layer caches are re-primed.
class TcnSampler {
public:
    TcnSampler(const TcnModel& model, const corpus::Vocabulary& vocab, int window_max = 250,
               int truncate_to = 200);

    void reset(const std::string& context);
    // samples one character, appends it to the context and returns it
    char sample_next(Rng& rng, double temperature = 1.0);
    // appends n characters
    std::string generate(size_t n_chars, Rng& rng, double temperature = 1.0);

    const std::string& context() const { return context_; }
    size_t max_context_seen() const { return max_context_seen_; }

    // distribution over the next character given the current context
    std::vector<double> next_distribution(double temperature = 1.0);

private:
    void prime();
    void append_column(int id);

    const TcnModel& model_;
    const corpus::Vocabulary& vocab_;
    int window_max_;
    int truncate_to_;
    std::string context_;
    size_t max_context_seen_ = 0;
    int cached_len_ = 0;
    std::vector<nn::Mat> layer_cache_;  // [0]=embedding out, then per block: a1, out
};

// Generates a stream of HTML starting from "<"; returns exactly n_chars
// characters (the seed included).
std::string sample_tags(const TcnModel& model, const corpus::Vocabulary& vocab, size_t n_chars,
                        Rng& rng, double temperature = 1.0, int window_max = 250,
                        int truncate_to = 200);

}  // namespace rlfuzz::tcn
