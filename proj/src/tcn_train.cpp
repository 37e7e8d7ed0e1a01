#include <cmath>
#include <cstdio>

#include "rlfuzz/tcn.hpp"

namespace rlfuzz::tcn {

bool EarlyStopping::observe(double val_loss) {
    ++epochs_seen_;
    if (best_epoch_ == 0 || val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epochs_seen_;
        since_best_ = 0;
        last_improved_ = true;
        return false;
    }
    last_improved_ = false;
    ++since_best_;
    return since_best_ >= patience_;
}

TrainResult train(TcnModel& model, const corpus::DatasetSplit& split, const TrainOptions& opts) {
    const TcnConfig& cfg = model.config();
    int window_len = opts.window_len > 0 ? opts.window_len : cfg.max_seq_len;
    if (window_len > cfg.max_seq_len)
        throw std::invalid_argument("train: window_len exceeds the model's max_seq_len");
    auto train_windows = corpus::training_windows(split.train, window_len, opts.stride);
    if (train_windows.empty())
        throw std::invalid_argument("train: corpus shorter than one training window");
    auto val_windows = corpus::training_windows(split.validation, window_len, opts.stride);

    Rng rng(opts.seed);
    EarlyStopping stopper(opts.patience);
    TrainResult result;
    std::vector<std::vector<double>> best_snapshot = model.snapshot_values();

    std::vector<size_t> order(train_windows.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
        rng.shuffle(order);

        double loss_sum = 0.0;
        size_t n_batches = 0;
        size_t bs = size_t(std::max(1, cfg.batch_size));
        for (size_t start = 0; start < order.size(); start += bs) {
            std::vector<const corpus::Window*> batch;
            for (size_t i = start; i < std::min(start + bs, order.size()); ++i)
                batch.push_back(&train_windows[order[i]]);
            model.params().zero_grad();
            double loss = model.forward_backward(batch, rng);
            if (std::isnan(loss) || std::isinf(loss))
                throw TrainDivergence("training diverged: loss is not finite at epoch " +
                                      std::to_string(epoch));
            model.params().adam_step(cfg.learning_rate);
            loss_sum += loss;
            ++n_batches;
        }
        double train_loss = loss_sum / double(n_batches);

        // with no validation windows the epoch training loss stands in
        double val_loss = val_windows.empty() ? train_loss : model.mean_loss(val_windows);
        if (std::isnan(val_loss) || std::isinf(val_loss))
            throw TrainDivergence("training diverged: validation loss is not finite at epoch " +
                                  std::to_string(epoch));

        result.history.push_back({epoch, train_loss, val_loss});
        if (opts.on_epoch) opts.on_epoch(epoch, train_loss, val_loss);

        bool stop = stopper.observe(val_loss);
        if (stopper.last_improved()) best_snapshot = model.snapshot_values();
        if (stop) {
            result.stopped_early = true;
            break;
        }
        if (opts.stop_below_train_loss > 0.0 && train_loss < opts.stop_below_train_loss) break;
    }

    model.restore_values(best_snapshot);
    result.best_epoch = stopper.best_epoch();
    result.best_val_loss = stopper.best_loss();
    return result;
}

std::string loss_history_csv(const TrainResult& result) {
    std::string csv = "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& e : result.history) {
        std::snprintf(buf, sizeof buf, "%d,%.9f,%.9f\n", e.epoch, e.train_loss, e.val_loss);
        csv += buf;
    }
    return csv;
}

}  // namespace rlfuzz::tcn
