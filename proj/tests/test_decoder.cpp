// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_helpers.hpp"

#include <chatbci/decoder.hpp>

#include <gtest/gtest.h>

using namespace chatbci;
using chatbci::testing::TempDir;

namespace {

std::size_t tensor_sum(const DecoderModel<float>& m)
{
    std::size_t n = 0;
    for (const auto& p : m.layout()) {
        std::size_t count = 1;
        for (const auto d : p.shape)
            count *= d;
        n += count;
    }
    return n;
}

std::vector<float> random_batch(const DecoderConfig& c, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<float> x(n * c.n_channels * c.n_samples);
    for (auto& v : x)
        v = static_cast<float>(rng.normal());
    return x;
}

} // namespace

TEST(DecoderConfig, DefaultLayerSizes)
{
    DecoderConfig c;
    c.n_channels = 22;
    c.n_samples = 1000;
    const auto m = DecoderModel<float>::build(c, 0);
    EXPECT_EQ(c.pooled_length(), 61u);
    EXPECT_EQ(m.param("temporal.weight").size() + m.param("temporal.bias").size(), 208u);
    EXPECT_EQ(m.param("spatial.weight").size() + m.param("spatial.bias").size(), 2832u);
    EXPECT_EQ(m.param("bn.weight").size() + m.param("bn.bias").size(), 32u);
    EXPECT_EQ(m.param("classifier.weight").size() + m.param("classifier.bias").size(), 16u * 61u * 4u + 4u);
    EXPECT_EQ(m.parameter_count(), 6980u);
    EXPECT_EQ(c.analytic_parameter_count(), 6980u);
}

TEST(DecoderConfig, ParameterCountFormulaHoldsForRandomConfigs)
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        DecoderConfig c;
        c.n_channels = static_cast<std::size_t>(rng.uniform_int(1, 30));
        c.temporal_filters = static_cast<std::size_t>(rng.uniform_int(1, 10));
        c.spatial_filters = static_cast<std::size_t>(rng.uniform_int(1, 20));
        c.temporal_kernel = static_cast<std::size_t>(rng.uniform_int(1, 40));
        c.pool_length = static_cast<std::size_t>(rng.uniform_int(1, 80));
        c.pool_stride = static_cast<std::size_t>(rng.uniform_int(1, 20));
        c.n_samples = c.temporal_kernel + c.pool_length + static_cast<std::size_t>(rng.uniform_int(1, 500));
        c.n_classes = static_cast<std::size_t>(rng.uniform_int(2, 6));
        c.conv_order = trial % 2 ? ConvOrder::spatial_first : ConvOrder::temporal_first;
        const auto m = DecoderModel<float>::build(c, 1);
        EXPECT_EQ(m.parameter_count(), c.analytic_parameter_count());
        EXPECT_EQ(tensor_sum(m), c.analytic_parameter_count());
        const auto t1 = c.n_samples - c.temporal_kernel + 1;
        EXPECT_EQ(c.pooled_length(), (t1 - c.pool_length) / c.pool_stride + 1);
        // The last pooling window ends inside the convolution output.
        EXPECT_LE((c.pooled_length() - 1) * c.pool_stride + c.pool_length, t1);
    }
}

TEST(DecoderConfig, RejectsShortInputs)
{
    DecoderConfig c;
    c.n_samples = 100;
    EXPECT_THROW(DecoderModel<float>::build(c, 0), ConfigError);
    c.n_samples = 101;
    EXPECT_NO_THROW(DecoderModel<float>::build(c, 0));
    c.dropout_p = 1.0;
    EXPECT_THROW(DecoderModel<float>::build(c, 0), ConfigError);
}

TEST(DecoderConfig, JsonRoundTrip)
{
    DecoderConfig c;
    c.conv_order = ConvOrder::spatial_first;
    c.include_eog = true;
    c.n_channels = 25;
    const auto back = DecoderConfig::from_json(c.to_json());
    EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Decoder, SameSeedSameParameters)
{
    DecoderConfig c;
    const auto a = DecoderModel<float>::build(c, 42);
    const auto b = DecoderModel<float>::build(c, 42);
    const auto d = DecoderModel<float>::build(c, 43);
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), d.parameters().begin()));
}

TEST(Decoder, EogSpatialKernelSpansAllChannels)
{
    DecoderConfig c;
    c.n_channels = 25;
    c.include_eog = true;
    const auto m = DecoderModel<float>::build(c, 0);
    const auto& info = m.layout()[2];
    EXPECT_EQ(info.name, "spatial.weight");
    EXPECT_EQ(info.shape, (std::vector<std::size_t>{16, 8, 25}));
}

TEST(Decoder, LogitShape)
{
    DecoderConfig c;
    c.n_channels = 4;
    c.n_samples = 250;
    auto m = DecoderModel<float>::build(c, 0);
    const auto logits = m.forward(random_batch(c, 3, 1), 3, false);
    EXPECT_EQ(logits.size(), 3u * 4u);
    EXPECT_THROW(m.forward(random_batch(c, 3, 1), 2, false), ShapeError);
}

TEST(Decoder, Swish)
{
    EXPECT_EQ(swish(0.0), 0.0);
    EXPECT_EQ(swish_derivative(0.0), 0.5);
    EXPECT_NEAR(swish(2.0), 2.0 / (1.0 + std::exp(-2.0)), 1e-15);
    const double h = 1e-6;
    for (const double x : {-3.0, -0.4, 0.7, 5.0})
        EXPECT_NEAR(swish_derivative(x), (swish(x + h) - swish(x - h)) / (2 * h), 1e-8);
}

TEST(Decoder, EvalModeIsDeterministic)
{
    DecoderConfig c;
    c.n_channels = 4;
    c.n_samples = 250;
    auto m = DecoderModel<float>::build(c, 5);
    const auto x = random_batch(c, 5, 2);
    EXPECT_EQ(m.forward(x, 5, false), m.forward(x, 5, false));
}

TEST(Decoder, DropoutOnlyInTrainMode)
{
    DecoderConfig c;
    c.n_channels = 4;
    c.n_samples = 250;
    auto m = DecoderModel<float>::build(c, 5);
    const auto x = random_batch(c, 4, 2);
    Rng r1(1), r2(2);
    EXPECT_NE(m.forward(x, 4, true, &r1), m.forward(x, 4, true, &r2));
    EXPECT_THROW(m.forward(x, 4, true, nullptr), ConfigError);
}

TEST(GradientCheck, TinyConfigAgreesWithFiniteDifferences)
{
    const auto r = gradient_check(tiny_decoder_config(), 0);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
    EXPECT_TRUE(r.all_finite);
    EXPECT_EQ(r.checked, tiny_decoder_config().analytic_parameter_count());
}

TEST(GradientCheck, SpatialFirstOrder)
{
    auto c = tiny_decoder_config(3, 40);
    c.conv_order = ConvOrder::spatial_first;
    const auto r = gradient_check(c, 7);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(GradientCheck, ZeroInputGivesFiniteGradients)
{
    const auto r = gradient_check(tiny_decoder_config(), 1, 1e-5, 4, true);
    EXPECT_TRUE(r.all_finite);
}

TEST(Decoder, SingleClassBatchBiasGradientSigns)
{
    auto c = tiny_decoder_config();
    auto m = DecoderModel<double>::build(c, 3);
    Rng rng(4);
    std::vector<double> x(6 * c.n_channels * c.n_samples);
    for (auto& v : x)
        v = rng.normal();
    const std::vector<int> labels(6, 2);
    m.zero_grad();
    std::vector<double> dlogits;
    softmax_cross_entropy<double>(m.forward(x, 6, true), labels, c.n_classes, &dlogits);
    m.backward(dlogits);
    const auto db = m.grad("classifier.bias");
    for (std::size_t k = 0; k < c.n_classes; ++k) {
        if (k == 2)
            EXPECT_LT(db[k], 0.0);
        else
            EXPECT_GT(db[k], 0.0);
    }
}

TEST(Checkpoint, RoundTripIsExact)
{
    TempDir dir;
    DecoderConfig c;
    c.n_channels = 5;
    c.n_samples = 300;
    auto m = DecoderModel<float>::build(c, 9);
    auto x = random_batch(c, 8, 1);
    Rng rng(0);
    m.forward(x, 8, true, &rng);  // move the running statistics
    save_checkpoint(m, dir / "best.ckpt", {{"epoch", 3}});
    nlohmann::json extra;
    auto back = load_checkpoint(dir / "best.ckpt", &extra);
    EXPECT_EQ(extra["epoch"], 3);
    EXPECT_TRUE(std::equal(m.parameters().begin(), m.parameters().end(), back.parameters().begin()));
    EXPECT_TRUE(std::equal(m.running_var().begin(), m.running_var().end(), back.running_var().begin()));
    EXPECT_EQ(m.forward(x, 8, false), back.forward(x, 8, false));
}
