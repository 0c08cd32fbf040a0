#include <gtest/gtest.h>

#include <functional>

#include "crest/layers.hpp"

using namespace crest;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto& x : t.data) x = rng.uniform(-scale, scale);
    return t;
}

// Plain central difference of f w.r.t. every entry of `x`, compared against `analytic`.
void expect_matches_numeric(const std::function<double()>& f, Vec& x, const Vec& analytic, const char* what) {
    ASSERT_EQ(x.size(), analytic.size());
    const double h = 1e-6;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = x[k];
        x[k] = orig + h;
        const double up = f();
        x[k] = orig - h;
        const double down = f();
        x[k] = orig;
        const double num = (up - down) / (2 * h);
        EXPECT_NEAR(analytic[k], num, 1e-7 + 1e-6 * std::abs(num)) << what << "[" << k << "]";
    }
}

double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
    Vec e{1.0, 2.0, 3.0};
    Vec a = softmax(e);
    EXPECT_NEAR(a[0] + a[1] + a[2], 1.0, 1e-15);
    EXPECT_NEAR(a[2] / a[1], std::exp(1.0), 1e-12);
    Vec big = softmax(Vec{1001.0, 1002.0, 1003.0});
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], big[i], 1e-15);
}

TEST(Affine, KnownProduct) {
    Tensor W({2, 3}), b({2});
    W.data = {1, 2, 3, 4, 5, 6};
    b.data = {0.5, -1};
    Vec x{1, 0, -1}, y(2);
    affine(W, b, x, y);
    EXPECT_EQ(y[0], -1.5);
    EXPECT_EQ(y[1], -3.0);
}

TEST(Attention, UniformWhenAllStatesEqual) {
    Rng rng(4);
    const std::size_t H = 5, N = 7;
    Tensor W = random_tensor({H, H}, rng), b = random_tensor({H}, rng), v = random_tensor({H}, rng);
    Tensor hs({N, H});
    Vec row{0.3, -0.2, 0.9, 0.0, 0.5};
    for (std::size_t j = 0; j < N; ++j) std::copy(row.begin(), row.end(), hs.row(j));
    Vec alpha;
    Vec ctx = attention_forward(W, b, v, hs, nullptr, &alpha);
    for (double a : alpha) EXPECT_NEAR(a, 1.0 / N, 1e-15);
    for (std::size_t k = 0; k < H; ++k) EXPECT_NEAR(ctx[k], row[k], 1e-15);
}

TEST(Attention, EmptySequenceThrows) {
    Tensor W({2, 2}), b({2}), v({2}), hs({0, 2});
    EXPECT_THROW(attention_forward(W, b, v, hs), ContractError);
}

TEST(Attention, GradientsMatchFiniteDifferences) {
    Rng rng(11);
    const std::size_t H = 4, N = 5;
    Tensor W = random_tensor({H, H}, rng), b = random_tensor({H}, rng), v = random_tensor({H}, rng);
    Tensor hs = random_tensor({N, H}, rng);
    Vec r(H);
    for (auto& x : r) x = rng.uniform(-1, 1);
    auto f = [&] { return dot(attention_forward(W, b, v, hs), r); };

    AttentionCache cache;
    attention_forward(W, b, v, hs, &cache);
    Tensor dW({H, H}), db({H}), dv({H});
    Tensor dhs = attention_backward(W, v, cache, r, dW, db, dv);
    expect_matches_numeric(f, W.data, dW.data, "W");
    expect_matches_numeric(f, b.data, db.data, "b");
    expect_matches_numeric(f, v.data, dv.data, "v");
    expect_matches_numeric(f, hs.data, dhs.data, "hs");
}

TEST(Lstm, ZeroWeightsGiveKnownState) {
    const std::size_t I = 2, H = 3;
    Tensor W({4 * H, I + H}), b({4 * H});
    // candidate bias 1, all gates open at sigmoid(0) = 0.5
    for (std::size_t k = 3 * H; k < 4 * H; ++k) b.data[k] = 1.0;
    LstmState s = lstm_step(W, b, Vec{0.4, -0.1}, LstmState::zeros(H));
    const double c = 0.5 * std::tanh(1.0);
    for (std::size_t k = 0; k < H; ++k) {
        EXPECT_NEAR(s.c[k], c, 1e-15);
        EXPECT_NEAR(s.h[k], 0.5 * std::tanh(c), 1e-15);
    }
}

TEST(Lstm, ShapeMismatchThrows) {
    Tensor W({8, 4}), b({8});
    EXPECT_THROW(lstm_step(W, b, Vec{1, 2, 3}, LstmState::zeros(2)), ContractError);
}

TEST(Lstm, SequenceGradientsMatchFiniteDifferences) {
    Rng rng(5);
    const std::size_t I = 3, H = 4, T = 6;
    Tensor W = random_tensor({4 * H, I + H}, rng, 0.6), b = random_tensor({4 * H}, rng, 0.6);
    Tensor inputs = random_tensor({T, I}, rng);
    Tensor R = random_tensor({T, H}, rng);
    auto f = [&] { return dot(lstm_forward(W, b, inputs, LstmState::zeros(H)).data, R.data); };

    LstmSequenceCache cache;
    lstm_forward(W, b, inputs, LstmState::zeros(H), &cache);
    Tensor dW({4 * H, I + H}), db({4 * H}), dinputs({T, I});
    lstm_backward(W, cache, R, dW, db, dinputs);
    expect_matches_numeric(f, W.data, dW.data, "W");
    expect_matches_numeric(f, b.data, db.data, "b");
    expect_matches_numeric(f, inputs.data, dinputs.data, "x");
}

TEST(Lstm, StepBackwardCarriesCellGradient) {
    Rng rng(8);
    const std::size_t I = 2, H = 3;
    Tensor W = random_tensor({4 * H, I + H}, rng), b = random_tensor({4 * H}, rng);
    LstmState prev{{0.1, -0.3, 0.2}, {0.5, 0.0, -0.4}};
    Vec x{0.7, -0.2}, rh{1, -2, 0.5}, rc{0.3, 0.3, -1};
    auto f = [&] {
        LstmState s = lstm_step(W, b, x, prev);
        return dot(s.h, rh) + dot(s.c, rc);
    };
    LstmStepCache cache;
    lstm_step(W, b, x, prev, &cache);
    Tensor dW({4 * H, I + H}), db({4 * H});
    Vec dx(I, 0.0);
    LstmState dprev = lstm_step_backward(W, cache, rh, rc, dW, db, dx);
    expect_matches_numeric(f, prev.h, dprev.h, "h_prev");
    expect_matches_numeric(f, prev.c, dprev.c, "c_prev");
    expect_matches_numeric(f, x, dx, "x");
}

TEST(Dense, ReluGradientsMatchFiniteDifferences) {
    Rng rng(2);
    Tensor W = random_tensor({5, 4}, rng), b = random_tensor({5}, rng);
    Vec x{0.3, -0.8, 0.1, 0.6}, r{1, 2, -1, 0.5, -0.3};
    for (bool relu : {false, true}) {
        auto f = [&] { return dot(dense_forward(W, b, x, relu), r); };
        DenseCache cache;
        dense_forward(W, b, x, relu, &cache);
        Tensor dW({5, 4}), db({5});
        Vec dx = dense_backward(W, cache, r, relu, dW, db);
        expect_matches_numeric(f, W.data, dW.data, "W");
        expect_matches_numeric(f, x, dx, "x");
    }
}
