#include <gtest/gtest.h>

#include "crest/optim.hpp"

using namespace crest;

namespace {

ParameterSet two_params() {
    ParameterSet p;
    p.add("a", {3});
    p.add("b", {2, 2});
    return p;
}

// f(a, b) = sum a_i^3 + sum_{ij} sin(b_ij) * a_0
double cubic_loss(const ParameterSet& p, ParameterSet* g, double corrupt = 0.0) {
    const auto& a = p[0].data;
    const auto& b = p[1].data;
    double f = 0;
    for (double x : a) f += x * x * x;
    for (double x : b) f += std::sin(x) * a[0];
    if (g) {
        for (std::size_t i = 0; i < a.size(); ++i) (*g)[0].data[i] += 3 * a[i] * a[i];
        for (std::size_t i = 0; i < b.size(); ++i) {
            (*g)[0].data[0] += std::sin(b[i]);
            (*g)[1].data[i] += std::cos(b[i]) * a[0] * (1.0 + corrupt);
        }
    }
    return f;
}

}  // namespace

TEST(Adam, FirstStepIsSignScaledByLr) {
    ParameterSet p = two_params(), g = p.zeros_like();
    p[0].data = {1.0, -2.0, 0.5};
    g[0].data = {0.3, -4.0, 0.0};
    g[1].data = {1e-3, 2.0, -2.0, 7.0};
    AdamConfig cfg;
    cfg.lr = 0.01;
    Adam opt(p, cfg);
    opt.step(p, g);
    // bias-corrected m = g and v = g^2 after one step, so the update is lr * g / (|g| + eps)
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t k = 0; k < p[i].size(); ++k) {
            const double gk = g[i].data[k];
            const double expected = -cfg.lr * gk / (std::abs(gk) + cfg.eps);
            const double before = i == 0 ? std::vector<double>{1.0, -2.0, 0.5}[k] : 0.0;
            EXPECT_NEAR(p[i].data[k] - before, expected, 1e-15);
        }
    EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, SecondStepMatchesHandRecurrence) {
    ParameterSet p, g;
    p.add("w", {1});
    g.add("w", {1});
    AdamConfig cfg;
    Adam opt(p, cfg);
    g[0].data[0] = 1.0;
    opt.step(p, g);
    g[0].data[0] = -3.0;
    opt.step(p, g);
    const double m = 0.9 * 0.1 * 1.0 + 0.1 * -3.0;
    const double v = 0.999 * 0.001 * 1.0 + 0.001 * 9.0;
    const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
    const double expected = -cfg.lr * 1.0 / (1.0 + cfg.eps) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    EXPECT_NEAR(p[0].data[0], expected, 1e-15);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
    ParameterSet p = two_params(), g = p.zeros_like();
    g[1].data[2] = std::nan("");
    Adam opt(p, {});
    try {
        opt.step(p, g);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
    }
    EXPECT_EQ(opt.steps(), 0);
}

TEST(Adam, LayoutMismatchThrows) {
    ParameterSet p = two_params(), g;
    g.add("a", {3});
    Adam opt(p, {});
    EXPECT_THROW(opt.step(p, g), ContractError);
}

TEST(ClipGradNorm, RescalesOnlyAboveLimit) {
    ParameterSet g = two_params();
    g[0].data = {3, 0, 0};
    g[1].data = {0, 4, 0, 0};
    EXPECT_DOUBLE_EQ(clip_grad_norm(g, 10.0), 5.0);
    EXPECT_EQ(g[0].data[0], 3.0);
    EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
    EXPECT_NEAR(g[0].data[0], 0.6, 1e-15);
    EXPECT_NEAR(g[1].data[1], 0.8, 1e-15);
    EXPECT_NEAR(global_norm(g), 1.0, 1e-15);
}

TEST(GradientCheck, PassesForCorrectGradient) {
    ParameterSet p = two_params();
    Rng rng(1);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (auto& x : p[i].data) x = rng.uniform(-1, 1);
    auto r = gradient_check([](const ParameterSet& q, ParameterSet* g) { return cubic_loss(q, g); }, p, 1e-6);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
    EXPECT_EQ(r.coordinates, 7u);
}

TEST(GradientCheck, CatchesCorruptedBackward) {
    ParameterSet p = two_params();
    Rng rng(1);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (auto& x : p[i].data) x = rng.uniform(0.2, 1);
    auto r = gradient_check([](const ParameterSet& q, ParameterSet* g) { return cubic_loss(q, g, 0.01); }, p, 1e-4);
    EXPECT_FALSE(r.passed);
    EXPECT_EQ(r.worst_parameter, "b");
    EXPECT_NEAR(r.max_rel_error, 0.01 / 1.01, 1e-4);
}
