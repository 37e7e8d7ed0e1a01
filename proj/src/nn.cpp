#include "rlfuzz/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlfuzz::nn {

namespace {

// dot product with eight independent accumulator lanes; the lane loop
// vectorizes and the chains hide FMA latency
inline double dot8(const double* __restrict a, const double* __restrict b, int n) {
    double acc[8] = {};
    int i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
           tail;
}

}  // namespace

Param& ParamSet::add(const std::string& name, std::vector<int> shape) {
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    auto p = std::make_unique<Param>();
    p->name = name;
    p->shape = std::move(shape);
    p->w.assign(n, 0.0);
    p->g.assign(n, 0.0);
    p->m.assign(n, 0.0);
    p->v2.assign(n, 0.0);
    params_.push_back(std::move(p));
    return *params_.back();
}

Param* ParamSet::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Param* ParamSet::find(const std::string& name) const {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) std::fill(p->g.begin(), p->g.end(), 0.0);
}

void ParamSet::adam_step(double lr, double beta1, double beta2, double eps) {
    ++adam_t_;
    double bc1 = 1.0 - std::pow(beta1, double(adam_t_));
    double bc2 = 1.0 - std::pow(beta2, double(adam_t_));
    for (auto& p : params_) {
        if (!p->trainable) continue;
        double* w = p->w.data();
        double* g = p->g.data();
        double* m = p->m.data();
        double* v = p->v2.data();
        size_t n = p->w.size();
        for (size_t i = 0; i < n; ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            double mh = m[i] / bc1;
            double vh = v[i] / bc2;
            w[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
}

void ParamSet::copy_values_from(const ParamSet& other) {
    if (params_.size() != other.params_.size())
        throw std::logic_error("param set copy: structure mismatch");
    for (size_t i = 0; i < params_.size(); ++i) {
        if (params_[i]->w.size() != other.params_[i]->w.size())
            throw std::logic_error("param set copy: shape mismatch for " + params_[i]->name);
        params_[i]->w = other.params_[i]->w;
    }
}

size_t ParamSet::total_size() const {
    size_t n = 0;
    for (const auto& p : params_) n += p->w.size();
    return n;
}

std::vector<Param*> ParamSet::params() {
    std::vector<Param*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamSet::params() const {
    std::vector<const Param*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

void init_uniform(Param& p, double lo, double hi, Rng& rng) {
    for (auto& w : p.w) w = lo + (hi - lo) * rng.uniform01();
}

void init_he(Param& p, int fan_in, Rng& rng) {
    double scale = std::sqrt(2.0 / double(fan_in));
    for (auto& w : p.w) w = scale * rng.gaussian();
}

void init_zero(Param& p) { std::fill(p.w.begin(), p.w.end(), 0.0); }

// ---- convolutions ----

void causal_conv_fwd(const Mat& in, Mat& out, const Param& w, const Param& b, int k, int d) {
    int Cin = in.rows, T = in.cols;
    int Cout = int(b.size());
    out.resize(Cout, T);
#pragma omp parallel for schedule(static)
    for (int co = 0; co < Cout; ++co) {
        double* orow = out.row(co);
        double bias = b.w[size_t(co)];
        for (int t = 0; t < T; ++t) orow[t] = bias;
        for (int ci = 0; ci < Cin; ++ci) {
            const double* irow = in.row(ci);
            const double* wrow = w.w.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int tap = 0; tap < k; ++tap) {
                int shift = (k - 1 - tap) * d;
                if (shift >= T) continue;
                double wv = wrow[tap];
                for (int t = shift; t < T; ++t) orow[t] += wv * irow[t - shift];
            }
        }
    }
}

void causal_conv_bwd(const Mat& in, const Mat& gout, Mat* gin, Param& w, Param& b, int k, int d) {
    int Cin = in.rows, T = in.cols;
    int Cout = gout.rows;

    // weight and bias gradients, one thread per output channel
#pragma omp parallel for schedule(static)
    for (int co = 0; co < Cout; ++co) {
        const double* grow = gout.row(co);
        double gb = 0.0;
        for (int t = 0; t < T; ++t) gb += grow[t];
        b.g[size_t(co)] += gb;
        for (int ci = 0; ci < Cin; ++ci) {
            const double* irow = in.row(ci);
            double* gw = w.g.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int tap = 0; tap < k; ++tap) {
                int shift = (k - 1 - tap) * d;
                if (shift >= T) continue;
                gw[tap] += dot8(grow + shift, irow, T - shift);
            }
        }
    }

    if (!gin) return;
    gin->resize(Cin, T);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < Cin; ++ci) {
        double* girow = gin->row(ci);
        for (int co = 0; co < Cout; ++co) {
            const double* grow = gout.row(co);
            const double* wrow = w.w.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int tap = 0; tap < k; ++tap) {
                int shift = (k - 1 - tap) * d;
                if (shift >= T) continue;
                double wv = wrow[tap];
                for (int t = shift; t < T; ++t) girow[t - shift] += wv * grow[t];
            }
        }
    }
}

void strided_conv_fwd(const Mat& in, Mat& out, const Param& w, const Param& b, int k, int s) {
    int Cin = in.rows, T = in.cols;
    int Cout = int(b.size());
    int To = T >= k ? (T - k) / s + 1 : 0;
    out.resize(Cout, To);
    if (To == 0) return;
#pragma omp parallel for schedule(static)
    for (int co = 0; co < Cout; ++co) {
        double* orow = out.row(co);
        double bias = b.w[size_t(co)];
        for (int ot = 0; ot < To; ++ot) orow[ot] = bias;
        for (int ci = 0; ci < Cin; ++ci) {
            const double* irow = in.row(ci);
            const double* wrow = w.w.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int ot = 0; ot < To; ++ot) {
                const double* base = irow + size_t(ot) * size_t(s);
                double acc = 0.0;
                for (int tap = 0; tap < k; ++tap) acc += wrow[tap] * base[tap];
                orow[ot] += acc;
            }
        }
    }
}

void strided_conv_bwd(const Mat& in, const Mat& gout, Mat* gin, Param& w, Param& b, int k, int s) {
    int Cin = in.rows, T = in.cols;
    int Cout = gout.rows;
    int To = gout.cols;

#pragma omp parallel for schedule(static)
    for (int co = 0; co < Cout; ++co) {
        const double* grow = gout.row(co);
        double gb = 0.0;
        for (int ot = 0; ot < To; ++ot) gb += grow[ot];
        b.g[size_t(co)] += gb;
        for (int ci = 0; ci < Cin; ++ci) {
            const double* irow = in.row(ci);
            double* gw = w.g.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int tap = 0; tap < k; ++tap) {
                double acc = 0.0;
                for (int ot = 0; ot < To; ++ot) acc += grow[ot] * irow[size_t(ot) * size_t(s) + size_t(tap)];
                gw[tap] += acc;
            }
        }
    }

    if (!gin) return;
    gin->resize(Cin, T);
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < Cin; ++ci) {
        double* girow = gin->row(ci);
        for (int co = 0; co < Cout; ++co) {
            const double* grow = gout.row(co);
            const double* wrow = w.w.data() + (size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k);
            for (int ot = 0; ot < To; ++ot) {
                double gv = grow[ot];
                double* base = girow + size_t(ot) * size_t(s);
                for (int tap = 0; tap < k; ++tap) base[tap] += wrow[tap] * gv;
            }
        }
    }
}

void relu_fwd(Mat& x) {
    for (auto& v : x.v)
        if (v < 0.0) v = 0.0;
}

void relu_bwd(const Mat& out, Mat& gout) {
    for (size_t i = 0; i < gout.v.size(); ++i)
        if (out.v[i] <= 0.0) gout.v[i] = 0.0;
}

void dropout_fwd(Mat& x, double rate, Rng& rng, Mat& mask) {
    mask.resize(x.rows, x.cols);
    if (rate <= 0.0) {
        std::fill(mask.v.begin(), mask.v.end(), 1.0);
        return;
    }
    double keep = 1.0 - rate;
    double scale = 1.0 / keep;
    for (size_t i = 0; i < x.v.size(); ++i) {
        double m = rng.uniform01() < keep ? scale : 0.0;
        mask.v[i] = m;
        x.v[i] *= m;
    }
}

void dropout_bwd(Mat& gout, const Mat& mask) {
    for (size_t i = 0; i < gout.v.size(); ++i) gout.v[i] *= mask.v[i];
}

void embedding_fwd(const Param& table, const std::vector<int>& ids, int embed_dim, Mat& out) {
    int T = int(ids.size());
    out.resize(embed_dim, T);
    for (int t = 0; t < T; ++t) {
        const double* erow = table.w.data() + size_t(ids[size_t(t)]) * size_t(embed_dim);
        for (int c = 0; c < embed_dim; ++c) out.at(c, t) = erow[c];
    }
}

void embedding_bwd(Param& table, const std::vector<int>& ids, const Mat& gout) {
    int T = int(ids.size());
    int E = gout.rows;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < E; ++c) {
        const double* grow = gout.row(c);
        for (int t = 0; t < T; ++t) table.g[size_t(ids[size_t(t)]) * size_t(E) + size_t(c)] += grow[t];
    }
}

void dense_fwd(const std::vector<double>& x, std::vector<double>& out, const Param& w,
               const Param& b) {
    size_t in_dim = x.size();
    size_t out_dim = b.size();
    out.assign(out_dim, 0.0);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < int(out_dim); ++j) {
        const double* wrow = w.w.data() + size_t(j) * in_dim;
        out[size_t(j)] = b.w[size_t(j)] + dot8(wrow, x.data(), int(in_dim));
    }
}

void dense_bwd(const std::vector<double>& x, const std::vector<double>& gout,
               std::vector<double>* gin, Param& w, Param& b) {
    size_t in_dim = x.size();
    size_t out_dim = gout.size();
    for (size_t j = 0; j < out_dim; ++j) {
        b.g[j] += gout[j];
        double* gw = w.g.data() + j * in_dim;
        double gv = gout[j];
        for (size_t i = 0; i < in_dim; ++i) gw[i] += gv * x[i];
    }
    if (!gin) return;
    gin->assign(in_dim, 0.0);
    for (size_t j = 0; j < out_dim; ++j) {
        const double* wrow = w.w.data() + j * in_dim;
        double gv = gout[j];
        for (size_t i = 0; i < in_dim; ++i) (*gin)[i] += wrow[i] * gv;
    }
}

double softmax_xent(const Mat& logits, const std::vector<int>& targets, Mat* dlogits,
                    double grad_scale) {
    int V = logits.rows, T = logits.cols;
    if (int(targets.size()) != T) throw std::logic_error("softmax_xent: target length mismatch");
    if (dlogits) dlogits->resize(V, T);

    double loss = 0.0;
    std::vector<double> p(size_t(V), 0.0);
    for (int t = 0; t < T; ++t) {
        double mx = logits.at(0, t);
        for (int v = 1; v < V; ++v) mx = std::max(mx, logits.at(v, t));
        double z = 0.0;
        for (int v = 0; v < V; ++v) {
            p[size_t(v)] = std::exp(logits.at(v, t) - mx);
            z += p[size_t(v)];
        }
        int target = targets[size_t(t)];
        loss -= std::log(p[size_t(target)] / z);
        if (dlogits) {
            for (int v = 0; v < V; ++v) {
                double soft = p[size_t(v)] / z;
                dlogits->at(v, t) = (soft - (v == target ? 1.0 : 0.0)) * grad_scale;
            }
        }
    }
    return loss;
}

std::vector<double> softmax_column(const Mat& logits, int t, double temperature) {
    int V = logits.rows;
    std::vector<double> p(size_t(V), 0.0);
    if (temperature <= 1e-12) {
        // greedy limit: a point mass on the argmax (lowest index wins ties)
        int best = 0;
        for (int v = 1; v < V; ++v)
            if (logits.at(v, t) > logits.at(best, t)) best = v;
        p[size_t(best)] = 1.0;
        return p;
    }
    double mx = logits.at(0, t);
    for (int v = 1; v < V; ++v) mx = std::max(mx, logits.at(v, t));
    double z = 0.0;
    for (int v = 0; v < V; ++v) {
        p[size_t(v)] = std::exp((logits.at(v, t) - mx) / temperature);
        z += p[size_t(v)];
    }
    for (auto& x : p) x /= z;
    return p;
}

}  // namespace rlfuzz::nn
