#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rlfuzz/rng.hpp"

namespace rlfuzz::nn {

// Row-major [rows][cols] matrix of doubles. Activations are stored as
// [channels][time].
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(size_t(r) * size_t(c), 0.0) {}

    void resize(int r, int c) {
        rows = r;
        cols = c;
        v.assign(size_t(r) * size_t(c), 0.0);
    }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }

    double* row(int r) { return v.data() + size_t(r) * size_t(cols); }
    const double* row(int r) const { return v.data() + size_t(r) * size_t(cols); }
    double& at(int r, int c) { return v[size_t(r) * size_t(cols) + size_t(c)]; }
    double at(int r, int c) const { return v[size_t(r) * size_t(cols) + size_t(c)]; }
};

struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<double> w;   // values
    std::vector<double> g;   // gradient
    std::vector<double> m;   // adam first moment
    std::vector<double> v2;  // adam second moment
    bool trainable = true;

    size_t size() const { return w.size(); }
};

// Owns the parameters of one network in registration order.
class ParamSet {
public:
    Param& add(const std::string& name, std::vector<int> shape);

    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    void zero_grad();

    // one Adam update over every trainable parameter
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // hard copy of values (target network sync); shapes must match
    void copy_values_from(const ParamSet& other);

    size_t total_size() const;
    int64_t step_count() const { return adam_t_; }
    void set_step_count(int64_t t) { adam_t_ = t; }

    std::vector<Param*> params();
    std::vector<const Param*> params() const;

private:
    std::vector<std::unique_ptr<Param>> params_;
    int64_t adam_t_ = 0;
};

// ---- initializers ----
void init_uniform(Param& p, double lo, double hi, Rng& rng);
void init_he(Param& p, int fan_in, Rng& rng);
void init_zero(Param& p);

// ---- layer ops ----
// All convolution weights are laid out [C_out][C_in][k].

// dilated causal convolution; output length = input length (left zero pad)
void causal_conv_fwd(const Mat& in, Mat& out, const Param& w, const Param& b, int k, int d);
// accumulates into w.g / b.g; gin may be null for the first layer
void causal_conv_bwd(const Mat& in, const Mat& gout, Mat* gin, Param& w, Param& b, int k, int d);

// strided convolution, valid padding; output length = (T - k)/s + 1
void strided_conv_fwd(const Mat& in, Mat& out, const Param& w, const Param& b, int k, int s);
void strided_conv_bwd(const Mat& in, const Mat& gout, Mat* gin, Param& w, Param& b, int k, int s);

void relu_fwd(Mat& x);
// gout masked in place using the forward output
void relu_bwd(const Mat& out, Mat& gout);

// inverted dropout; mask holds 0 or 1/(1-rate)
void dropout_fwd(Mat& x, double rate, Rng& rng, Mat& mask);
void dropout_bwd(Mat& gout, const Mat& mask);

// embedding table [V][E] -> activations [E][T]
void embedding_fwd(const Param& table, const std::vector<int>& ids, int embed_dim, Mat& out);
void embedding_bwd(Param& table, const std::vector<int>& ids, const Mat& gout);

// dense layer on flat vectors: out[j] = b[j] + sum_i w[j*in+i] * x[i]
void dense_fwd(const std::vector<double>& x, std::vector<double>& out, const Param& w,
               const Param& b);
void dense_bwd(const std::vector<double>& x, const std::vector<double>& gout,
               std::vector<double>* gin, Param& w, Param& b);

// per-position softmax + cross entropy against target ids.
// logits [V][T]; returns the summed loss over positions; when dlogits is
// non-null it receives (softmax - onehot) * grad_scale.
double softmax_xent(const Mat& logits, const std::vector<int>& targets, Mat* dlogits,
                    double grad_scale);

// probability column of a softmax at one position
std::vector<double> softmax_column(const Mat& logits, int t, double temperature = 1.0);

}  // namespace rlfuzz::nn
