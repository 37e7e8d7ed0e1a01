#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rlfuzz/checkpoint.hpp"
#include "rlfuzz/nn.hpp"

using namespace rlfuzz;
using namespace rlfuzz::nn;

namespace {

// reference implementation: direct definition of the dilated causal conv
Mat naive_causal_conv(const Mat& in, const Param& w, const Param& b, int k, int d) {
    int Cin = in.rows, T = in.cols, Cout = int(b.size());
    Mat out(Cout, T);
    for (int co = 0; co < Cout; ++co)
        for (int t = 0; t < T; ++t) {
            double acc = b.w[size_t(co)];
            for (int ci = 0; ci < Cin; ++ci)
                for (int tap = 0; tap < k; ++tap) {
                    int src = t - (k - 1 - tap) * d;
                    if (src < 0) continue;
                    acc += w.w[(size_t(co) * size_t(Cin) + size_t(ci)) * size_t(k) + size_t(tap)] *
                           in.at(ci, src);
                }
            out.at(co, t) = acc;
        }
    return out;
}

Mat random_mat(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (auto& v : m.v) v = rng.gaussian();
    return m;
}

}  // namespace

TEST_CASE("causal conv matches the naive definition") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        int Cin = 1 + int(rng.uniform(5));
        int Cout = 1 + int(rng.uniform(5));
        int k = 1 + int(rng.uniform(4));
        int d = 1 << rng.uniform(4);
        int T = 1 + int(rng.uniform(40));
        ParamSet ps;
        Param& w = ps.add("w", {Cout, Cin, k});
        Param& b = ps.add("b", {Cout});
        init_uniform(w, -1, 1, rng);
        init_uniform(b, -1, 1, rng);
        Mat in = random_mat(Cin, T, rng);
        Mat out;
        causal_conv_fwd(in, out, w, b, k, d);
        Mat expect = naive_causal_conv(in, w, b, k, d);
        for (size_t i = 0; i < out.v.size(); ++i) CHECK(out.v[i] == doctest::Approx(expect.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("causal conv gradients match finite differences") {
    Rng rng(2);
    int Cin = 3, Cout = 2, k = 3, d = 2, T = 9;
    ParamSet ps;
    Param& w = ps.add("w", {Cout, Cin, k});
    Param& b = ps.add("b", {Cout});
    init_uniform(w, -1, 1, rng);
    init_uniform(b, -0.5, 0.5, rng);
    Mat in = random_mat(Cin, T, rng);

    // scalar objective: sum of squares of the output
    auto objective = [&]() {
        Mat out;
        causal_conv_fwd(in, out, w, b, k, d);
        double s = 0;
        for (double v : out.v) s += v * v;
        return 0.5 * s;
    };

    Mat out;
    causal_conv_fwd(in, out, w, b, k, d);
    Mat gout = out;  // d(0.5*sum out^2)/dout = out
    Mat gin;
    ps.zero_grad();
    causal_conv_bwd(in, gout, &gin, w, b, k, d);

    const double h = 1e-6;
    for (size_t i = 0; i < w.w.size(); ++i) {
        double orig = w.w[i];
        w.w[i] = orig + h;
        double up = objective();
        w.w[i] = orig - h;
        double dn = objective();
        w.w[i] = orig;
        CHECK(w.g[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < b.w.size(); ++i) {
        double orig = b.w[i];
        b.w[i] = orig + h;
        double up = objective();
        b.w[i] = orig - h;
        double dn = objective();
        b.w[i] = orig;
        CHECK(b.g[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < in.v.size(); ++i) {
        double orig = in.v[i];
        in.v[i] = orig + h;
        double up = objective();
        in.v[i] = orig - h;
        double dn = objective();
        in.v[i] = orig;
        CHECK(gin.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("strided conv output length and gradient") {
    Rng rng(3);
    int Cin = 2, Cout = 3, k = 4, s = 2, T = 13;
    ParamSet ps;
    Param& w = ps.add("w", {Cout, Cin, k});
    Param& b = ps.add("b", {Cout});
    init_uniform(w, -1, 1, rng);
    init_uniform(b, -1, 1, rng);
    Mat in = random_mat(Cin, T, rng);
    Mat out;
    strided_conv_fwd(in, out, w, b, k, s);
    CHECK(out.cols == (T - k) / s + 1);

    auto objective = [&]() {
        Mat o;
        strided_conv_fwd(in, o, w, b, k, s);
        double acc = 0;
        for (double v : o.v) acc += v * v;
        return 0.5 * acc;
    };
    Mat gout = out;
    Mat gin;
    ps.zero_grad();
    strided_conv_bwd(in, gout, &gin, w, b, k, s);
    const double h = 1e-6;
    for (size_t i = 0; i < w.w.size(); ++i) {
        double orig = w.w[i];
        w.w[i] = orig + h;
        double up = objective();
        w.w[i] = orig - h;
        double dn = objective();
        w.w[i] = orig;
        CHECK(w.g[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < in.v.size(); ++i) {
        double orig = in.v[i];
        in.v[i] = orig + h;
        double up = objective();
        in.v[i] = orig - h;
        double dn = objective();
        in.v[i] = orig;
        CHECK(gin.v[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("dense layer gradient") {
    Rng rng(4);
    ParamSet ps;
    Param& w = ps.add("w", {3, 5});
    Param& b = ps.add("b", {3});
    init_uniform(w, -1, 1, rng);
    init_uniform(b, -1, 1, rng);
    std::vector<double> x(5);
    for (auto& v : x) v = rng.gaussian();

    auto objective = [&]() {
        std::vector<double> out;
        dense_fwd(x, out, w, b);
        double s = 0;
        for (double v : out) s += v * v;
        return 0.5 * s;
    };
    std::vector<double> out;
    dense_fwd(x, out, w, b);
    std::vector<double> gin;
    ps.zero_grad();
    dense_bwd(x, out, &gin, w, b);
    const double h = 1e-6;
    for (size_t i = 0; i < w.w.size(); ++i) {
        double orig = w.w[i];
        w.w[i] = orig + h;
        double up = objective();
        w.w[i] = orig - h;
        double dn = objective();
        w.w[i] = orig;
        CHECK(w.g[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < x.size(); ++i) {
        double orig = x[i];
        x[i] = orig + h;
        double up = objective();
        x[i] = orig - h;
        double dn = objective();
        x[i] = orig;
        CHECK(gin[i] == doctest::Approx((up - dn) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("softmax cross entropy value and gradient") {
    Mat logits(3, 2);
    logits.at(0, 0) = 1.0;
    logits.at(1, 0) = 2.0;
    logits.at(2, 0) = 3.0;
    logits.at(0, 1) = 0.0;
    logits.at(1, 1) = 0.0;
    logits.at(2, 1) = 0.0;
    std::vector<int> targets = {2, 0};

    Mat dlogits;
    double loss = softmax_xent(logits, targets, &dlogits, 1.0);

    // hand-computed: -log softmax(3 | [1,2,3]) - log softmax(0 | [0,0,0])
    double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    double expected = -std::log(std::exp(3.0) / z) - std::log(1.0 / 3.0);
    CHECK(loss == doctest::Approx(expected).epsilon(1e-12));

    // gradient = softmax - onehot
    CHECK(dlogits.at(2, 0) == doctest::Approx(std::exp(3.0) / z - 1.0));
    CHECK(dlogits.at(0, 1) == doctest::Approx(1.0 / 3.0 - 1.0));
    CHECK(dlogits.at(1, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax column sums to one and respects temperature") {
    Rng rng(6);
    Mat logits = Mat(7, 3);
    for (auto& v : logits.v) v = rng.gaussian() * 3;
    for (int t = 0; t < 3; ++t) {
        auto p = softmax_column(logits, t, 1.0);
        double sum = 0;
        for (double x : p) sum += x;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // temperature -> 0 gives a point mass on the argmax
    auto greedy = softmax_column(logits, 0, 0.0);
    int best = 0;
    for (int v = 1; v < 7; ++v)
        if (logits.at(v, 0) > logits.at(best, 0)) best = v;
    CHECK(greedy[size_t(best)] == 1.0);
}

TEST_CASE("adam step decreases a quadratic") {
    ParamSet ps;
    Param& p = ps.add("p", {4});
    p.w = {4.0, -3.0, 2.0, -1.0};
    for (int step = 0; step < 2000; ++step) {
        for (size_t i = 0; i < p.w.size(); ++i) p.g[i] = 2.0 * p.w[i];  // d/dw of w^2
        ps.adam_step(0.01);
    }
    for (double v : p.w) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("frozen parameters are untouched by adam") {
    ParamSet ps;
    Param& p = ps.add("frozen", {3});
    p.w = {1.0, 2.0, 3.0};
    p.trainable = false;
    p.g = {10.0, 10.0, 10.0};
    ps.adam_step(0.1);
    CHECK(p.w == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("dropout scales and masks") {
    Rng rng(8);
    Mat x(10, 100);
    for (auto& v : x.v) v = 1.0;
    Mat mask;
    dropout_fwd(x, 0.4, rng, mask);
    int zeros = 0;
    for (size_t i = 0; i < x.v.size(); ++i) {
        if (x.v[i] == 0.0) {
            ++zeros;
            CHECK(mask.v[i] == 0.0);
        } else {
            CHECK(x.v[i] == doctest::Approx(1.0 / 0.6));
        }
    }
    CHECK(zeros > 250);
    CHECK(zeros < 550);
}

TEST_CASE("checkpoint container round trip") {
    ParamSet ps;
    Rng rng(9);
    Param& a = ps.add("alpha", {2, 3});
    Param& b = ps.add("beta", {4});
    init_uniform(a, -1, 1, rng);
    init_uniform(b, -1, 1, rng);

    Checkpoint ck;
    ck.kind = "tcn";
    ck.meta["config"] = "name = test\n";
    ck.meta["note"] = "fixture";
    ck.put_params(ps);
    Bytes data = ck.serialize();

    Checkpoint back = Checkpoint::deserialize(data);
    CHECK(back.kind == "tcn");
    CHECK(back.meta.at("note") == "fixture");
    REQUIRE(back.arrays.size() == 2);
    CHECK(back.arrays[0].name == "alpha");
    CHECK(back.arrays[0].data == a.w);

    ParamSet ps2;
    ps2.add("alpha", {2, 3});
    ps2.add("beta", {4});
    back.restore_params(ps2);
    CHECK(ps2.find("alpha")->w == a.w);
    CHECK(ps2.find("beta")->w == b.w);

    // corrupted magic rejected
    data[0] = 'X';
    CHECK_THROWS_AS(Checkpoint::deserialize(data), CheckpointError);
}
