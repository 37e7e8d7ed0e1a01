#include <stdexcept>

#include "rlfuzz/tcn.hpp"

namespace rlfuzz::tcn {

namespace {

// one output column of a dilated causal convolution over cached inputs;
// accumulation order matches the full forward pass exactly
void conv_col(const nn::Mat& cache, int t, const nn::Param& w, const nn::Param& b, int k, int d,
              std::vector<double>& out) {
    int Cin = cache.rows;
    int Cout = int(b.size());
    out.assign(size_t(Cout), 0.0);
    for (int co = 0; co < Cout; ++co) {
        double acc = b.w[size_t(co)];
        const double* wbase = w.w.data() + size_t(co) * size_t(Cin) * size_t(k);
        for (int ci = 0; ci < Cin; ++ci) {
            const double* crow = cache.row(ci);
            const double* wrow = wbase + size_t(ci) * size_t(k);
            for (int tap = 0; tap < k; ++tap) {
                int idx = t - (k - 1 - tap) * d;
                if (idx >= 0) acc += wrow[tap] * crow[idx];
            }
        }
        out[size_t(co)] = acc;
    }
}

void matvec(const std::vector<double>& x, const nn::Param& w, const nn::Param& b,
            std::vector<double>& out) {
    size_t in_dim = x.size();
    size_t out_dim = b.size();
    out.assign(out_dim, 0.0);
    for (size_t j = 0; j < out_dim; ++j) {
        double acc = b.w[j];
        const double* wrow = w.w.data() + j * in_dim;
        for (size_t i = 0; i < in_dim; ++i) acc += wrow[i] * x[i];
        out[j] = acc;
    }
}

void relu_vec(std::vector<double>& v) {
    for (auto& x : v)
        if (x < 0.0) x = 0.0;
}

}  // namespace

TcnSampler::TcnSampler(const TcnModel& model, const corpus::Vocabulary& vocab, int window_max,
                       int truncate_to)
    : model_(model), vocab_(vocab), window_max_(window_max), truncate_to_(truncate_to) {
    if (window_max_ > model_.config().max_seq_len)
        throw std::invalid_argument("sampler window exceeds model max_seq_len");
    if (truncate_to_ <= 0 || truncate_to_ >= window_max_)
        throw std::invalid_argument("sampler truncate_to must be in (0, window_max)");
    int E = model_.config().embed_dim;
    layer_cache_.resize(1 + 2 * size_t(model_.n_blocks()));
    for (auto& m : layer_cache_) m.resize(E, window_max_);
}

void TcnSampler::reset(const std::string& context) {
    context_ = context;
    if (int(context_.size()) >= window_max_)
        context_ = context_.substr(context_.size() - size_t(truncate_to_));
    max_context_seen_ = std::max(max_context_seen_, context_.size());
    prime();
}

void TcnSampler::prime() {
    cached_len_ = 0;
    for (auto& m : layer_cache_) m.zero();
    for (char c : context_) append_column(vocab_.id_of(c));
}

void TcnSampler::append_column(int id) {
    int t = cached_len_;
    int E = model_.config().embed_dim;
    int k = model_.config().kernel_size;

    // embedding column
    {
        const double* erow = model_.embed_->w.data() + size_t(id) * size_t(E);
        for (int c = 0; c < E; ++c) layer_cache_[0].at(c, t) = erow[c];
    }

    std::vector<double> col, col2;
    for (int i = 0; i < model_.n_blocks(); ++i) {
        const auto& bp = model_.blocks_[size_t(i)];
        nn::Mat& in_cache = layer_cache_[size_t(2 * i)];
        nn::Mat& a1_cache = layer_cache_[size_t(2 * i + 1)];
        nn::Mat& out_cache = layer_cache_[size_t(2 * i + 2)];

        conv_col(in_cache, t, *bp.w1, *bp.b1, k, bp.dilation, col);
        relu_vec(col);
        for (int c = 0; c < E; ++c) a1_cache.at(c, t) = col[size_t(c)];

        conv_col(a1_cache, t, *bp.w2, *bp.b2, k, bp.dilation, col2);
        relu_vec(col2);
        for (int c = 0; c < E; ++c) {
            double v = col2[size_t(c)] + in_cache.at(c, t);
            out_cache.at(c, t) = v < 0.0 ? 0.0 : v;
        }
    }
    ++cached_len_;
}

std::vector<double> TcnSampler::next_distribution(double temperature) {
    if (context_.empty()) throw std::logic_error("sampler: empty context");
    int t = cached_len_ - 1;
    const nn::Mat& top = layer_cache_.back();

    std::vector<double> cur(size_t(top.rows));
    for (int c = 0; c < top.rows; ++c) cur[size_t(c)] = top.at(c, t);

    std::vector<double> d1, d2, logits;
    matvec(cur, *model_.dense1_w_, *model_.dense1_b_, d1);
    relu_vec(d1);
    matvec(d1, *model_.dense2_w_, *model_.dense2_b_, d2);
    relu_vec(d2);
    matvec(d2, *model_.out_w_, *model_.out_b_, logits);

    nn::Mat lm(int(logits.size()), 1);
    for (size_t v = 0; v < logits.size(); ++v) lm.at(int(v), 0) = logits[v];
    return nn::softmax_column(lm, 0, temperature);
}

char TcnSampler::sample_next(Rng& rng, double temperature) {
    if (int(context_.size()) >= window_max_) {
        context_ = context_.substr(context_.size() - size_t(truncate_to_));
        prime();
    }
    std::vector<double> p = next_distribution(temperature);

    double r = rng.uniform01();
    double cum = 0.0;
    int chosen = int(p.size()) - 1;
    for (size_t v = 0; v < p.size(); ++v) {
        cum += p[v];
        if (r < cum) {
            chosen = int(v);
            break;
        }
    }

    char c = vocab_.char_of(chosen);
    context_ += c;
    max_context_seen_ = std::max(max_context_seen_, context_.size());
    append_column(chosen);
    return c;
}

std::string TcnSampler::generate(size_t n_chars, Rng& rng, double temperature) {
    std::string out;
    out.reserve(n_chars);
    for (size_t i = 0; i < n_chars; ++i) out += sample_next(rng, temperature);
    return out;
}

std::string sample_tags(const TcnModel& model, const corpus::Vocabulary& vocab, size_t n_chars,
                        Rng& rng, double temperature, int window_max, int truncate_to) {
    if (n_chars == 0) return "";
    TcnSampler sampler(model, vocab, window_max, truncate_to);
    sampler.reset("<");
    std::string out = "<";
    out += sampler.generate(n_chars - 1, rng, temperature);
    return out;
}

}  // namespace rlfuzz::tcn
