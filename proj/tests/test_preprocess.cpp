// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_helpers.hpp"

#include <chatbci/error.hpp>
#include <chatbci/preprocess.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chatbci;
using chatbci::testing::noise_recording;

namespace {

constexpr double pi = std::numbers::pi;

Recording single_channel(std::vector<double> x, double fs)
{
    Recording rec;
    rec.sampling_rate_hz = fs;
    rec.channels = {{"X", ChannelKind::EEG, "uV"}};
    rec.class_map = iv2a_class_map();
    rec.signal = SignalMatrix(1, x.size());
    std::copy(x.begin(), x.end(), rec.signal.row(0).begin());
    return rec;
}

std::vector<double> sine(double freq, double fs, std::size_t n, double amp = 1.0, double phase = 0.0)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = amp * std::sin(2.0 * pi * freq * static_cast<double>(i) / fs + phase);
    return x;
}

// Closed-form squared magnitude of a bilinear-transform Butterworth design:
// the pre-warped analog frequency of f is 2·fs·tan(π f / fs).
double analytic_power_gain(const FilterSpec& spec, double f, double fs)
{
    auto w = [&](double hz) { return std::tan(pi * hz / fs); };
    const double n2 = 2.0 * spec.order;
    switch (spec.kind) {
    case FilterKind::lowpass: return 1.0 / (1.0 + std::pow(w(f) / w(spec.cutoff_hz[0]), n2));
    case FilterKind::highpass: return 1.0 / (1.0 + std::pow(w(spec.cutoff_hz[0]) / w(f), n2));
    case FilterKind::bandpass: {
        const double w1 = w(spec.cutoff_hz[0]), w2 = w(spec.cutoff_hz[1]);
        const double omega = (w(f) * w(f) - w1 * w2) / (w(f) * (w2 - w1));
        return 1.0 / (1.0 + std::pow(omega, n2));
    }
    }
    return 0.0;
}

double max_abs(std::span<const double> x)
{
    double m = 0;
    for (const double v : x)
        m = std::max(m, std::abs(v));
    return m;
}

} // namespace

TEST(CommonAverageReference, TwoChannelExample)
{
    Recording rec = single_channel({1.0}, 250.0);
    rec.channels = {{"A", ChannelKind::EEG, "uV"}, {"B", ChannelKind::EEG, "uV"}, {"V", ChannelKind::EOG, "uV"}};
    rec.signal = SignalMatrix(3, 1);
    rec.signal(0, 0) = 1.0;
    rec.signal(1, 0) = 3.0;
    rec.signal(2, 0) = 7.0;
    const auto out = common_average_reference(rec);
    EXPECT_EQ(out.signal(0, 0), -1.0);
    EXPECT_EQ(out.signal(1, 0), 1.0);
    EXPECT_EQ(out.signal(2, 0), 7.0);
}

TEST(CommonAverageReference, IdenticalChannelsGoToZero)
{
    auto rec = noise_recording(5, 0, 200, 250.0, 1);
    for (std::size_t c = 1; c < 5; ++c)
        std::copy(rec.signal.row(0).begin(), rec.signal.row(0).end(), rec.signal.row(c).begin());
    const auto out = common_average_reference(rec);
    for (const double v : out.signal.values())
        EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(CommonAverageReference, NullspaceIdempotenceAndEogPassThrough)
{
    const auto rec = noise_recording(22, 3, 3000, 250.0, 11);
    const auto once = common_average_reference(rec);
    const auto twice = common_average_reference(once);
    const auto eeg = rec.channel_indices(ChannelKind::EEG);
    for (std::size_t t = 0; t < rec.n_samples(); ++t) {
        double mean = 0;
        for (const auto c : eeg)
            mean += once.signal(c, t);
        EXPECT_LT(std::abs(mean / 22.0), 1e-6);
        for (std::size_t c = 0; c < rec.n_channels(); ++c)
            EXPECT_NEAR(once.signal(c, t), twice.signal(c, t), 1e-6);
    }
    for (const auto c : rec.channel_indices(ChannelKind::EOG))
        for (std::size_t t = 0; t < rec.n_samples(); ++t)
            EXPECT_EQ(once.signal(c, t), rec.signal(c, t));
}

TEST(CommonAverageReference, NeedsTwoEegChannels)
{
    const auto rec = noise_recording(1, 2, 100, 250.0, 1);
    EXPECT_THROW(common_average_reference(rec), PreconditionError);
}

TEST(Butterworth, MagnitudeMatchesClosedForm)
{
    const double fs = 250.0;
    for (const auto& spec : {FilterSpec::lowpass(40.0), FilterSpec::highpass(4.0), FilterSpec::bandpass(8.0, 30.0),
                             FilterSpec::lowpass(10.0, 3), FilterSpec::highpass(1.0, 2), FilterSpec::bandpass(0.5, 100.0, 5)}) {
        const ButterworthFilter filter(spec, fs);
        for (double f = 0.5; f < fs / 2; f += 0.5) {
            const double expected = std::sqrt(analytic_power_gain(spec, f, fs));
            EXPECT_NEAR(filter.magnitude(f), expected, 1e-9) << to_string(spec.kind) << " f=" << f;
        }
    }
}

TEST(Butterworth, DcGains)
{
    const double fs = 250.0;
    const std::vector<double> dc(2500, 5.0);
    const auto lp = filter_signal(single_channel(dc, fs), FilterSpec::lowpass(40.0));
    const auto hp = filter_signal(single_channel(dc, fs), FilterSpec::highpass(4.0));
    for (std::size_t t = 250; t < 2250; ++t) {
        EXPECT_NEAR(lp.signal(0, t), 5.0, 1e-3);
        EXPECT_NEAR(hp.signal(0, t), 0.0, 1e-3);
    }
}

TEST(Butterworth, FiftyHertzAttenuationMatchesSquaredResponse)
{
    const double fs = 250.0;
    const auto spec = FilterSpec::lowpass(40.0);
    // (1 + (tan(π·50/250) / tan(π·40/250))^8)^-1, evaluated before building.
    const double expected = analytic_power_gain(spec, 50.0, fs);
    EXPECT_NEAR(expected, 0.0970361, 1e-6);

    const auto out = filter_signal(single_channel(sine(50.0, fs, 5000), fs), spec);
    const auto middle = out.signal.row(0).subspan(1000, 3000);
    EXPECT_NEAR(max_abs(middle), expected, 0.05 * expected);
}

TEST(Butterworth, ZeroPhaseHasNoLagInPassband)
{
    const double fs = 250.0;
    for (const double freq : {5.0, 10.0, 22.0}) {
        const auto x = sine(freq, fs, 2500, 1.0, 0.3);
        const auto y = ButterworthFilter(FilterSpec::lowpass(40.0), fs).apply_zero_phase(x);
        int best_lag = 99;
        double best = -1e300;
        for (int lag = -12; lag <= 12; ++lag) {
            double acc = 0;
            for (int i = 300; i < 2200; ++i)
                acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
            if (acc > best) {
                best = acc;
                best_lag = lag;
            }
        }
        EXPECT_EQ(best_lag, 0) << freq;
    }
}

TEST(Butterworth, CausalPassDelaysTheSignal)
{
    const double fs = 250.0;
    const auto x = sine(10.0, fs, 2500);
    const auto y = ButterworthFilter(FilterSpec::lowpass(20.0), fs).apply(x);
    double at0 = 0, at3 = 0;
    for (std::size_t i = 300; i < 2200; ++i) {
        at0 += x[i] * y[i];
        at3 += x[i] * y[i + 3];
    }
    EXPECT_GT(at3, at0);
}

TEST(Butterworth, FilteringIsLinear)
{
    const double fs = 250.0;
    const auto a = noise_recording(2, 0, 1500, fs, 1);
    const auto b = noise_recording(2, 0, 1500, fs, 2);
    auto mix = a;
    for (std::size_t i = 0; i < mix.signal.values().size(); ++i)
        mix.signal.values()[i] = 2.5 * a.signal.values()[i] - 0.75 * b.signal.values()[i];
    for (const auto& spec : {FilterSpec::lowpass(40.0), FilterSpec::highpass(4.0), FilterSpec::bandpass(8, 30)}) {
        const auto fa = filter_signal(a, spec), fb = filter_signal(b, spec), fm = filter_signal(mix, spec);
        double scale = 0, err = 0;
        for (std::size_t i = 0; i < fm.signal.values().size(); ++i) {
            const double expected = 2.5 * fa.signal.values()[i] - 0.75 * fb.signal.values()[i];
            err = std::max(err, std::abs(fm.signal.values()[i] - expected));
            scale = std::max(scale, std::abs(expected));
        }
        EXPECT_LT(err / scale, 1e-6);
    }
}

TEST(Butterworth, ChannelsFilteredIndependently)
{
    auto rec = noise_recording(3, 0, 800, 250.0, 4);
    const auto full = filter_signal(rec, FilterSpec::lowpass(30.0));
    for (auto& v : rec.signal.row(1))
        v = 0.0;
    const auto partial = filter_signal(rec, FilterSpec::lowpass(30.0));
    for (std::size_t t = 0; t < 800; ++t) {
        EXPECT_EQ(partial.signal(0, t), full.signal(0, t));
        EXPECT_EQ(partial.signal(2, t), full.signal(2, t));
    }
}

TEST(FilterSpec, RejectsUnrealizableSpecs)
{
    const auto rec = noise_recording(2, 0, 100, 250.0, 1);
    EXPECT_THROW(filter_signal(rec, FilterSpec::lowpass(125.0)), SpecError);
    EXPECT_THROW(filter_signal(rec, FilterSpec::highpass(200.0)), SpecError);
    EXPECT_THROW(filter_signal(rec, FilterSpec::bandpass(30.0, 8.0)), SpecError);
    EXPECT_THROW(filter_signal(rec, FilterSpec::lowpass(-1.0)), SpecError);
    EXPECT_THROW(FilterSpec::parse("notch:50"), SpecError);
    EXPECT_EQ(FilterSpec::parse("bp:8:30"), FilterSpec::bandpass(8, 30));
    EXPECT_EQ(FilterSpec::from_json(FilterSpec::highpass(4).to_json()), FilterSpec::highpass(4));
}

TEST(Epoch, RampWindowIsVerbatim)
{
    std::vector<double> ramp(400);
    for (std::size_t i = 0; i < ramp.size(); ++i)
        ramp[i] = static_cast<double>(i);
    auto rec = single_channel(ramp, 250.0);
    rec.events = {{100, 0, "feet"}};
    const auto ep = epoch(rec, {0.0, 0.02});
    ASSERT_EQ(ep.n_trials(), 1u);
    ASSERT_EQ(ep.n_samples, 5u);
    for (std::size_t k = 0; k < 5; ++k)
        EXPECT_EQ(ep.at(0, 0, k), 100.0 + static_cast<double>(k));
    EXPECT_EQ(ep.labels[0], 2);
}

TEST(Epoch, NegativeOffsetAndSampleCount)
{
    std::vector<double> ramp(1000);
    for (std::size_t i = 0; i < ramp.size(); ++i)
        ramp[i] = static_cast<double>(i);
    auto rec = single_channel(ramp, 250.0);
    rec.events = {{500, 0, "tongue"}};
    const auto ep = epoch(rec, {-0.5, 1.0});
    EXPECT_EQ(ep.n_samples, 375u);
    EXPECT_EQ(ep.at(0, 0, 0), 375.0);
}

TEST(Epoch, OverlappingEventsShareSamplesWithoutMutation)
{
    auto rec = noise_recording(2, 1, 1000, 250.0, 5);
    rec.events = {{100, 0, "left_hand"}, {110, 0, "right_hand"}};
    const auto before = rec;
    const auto ep = epoch(rec, {0.0, 0.2});
    ASSERT_EQ(ep.n_trials(), 2u);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 10; k < 50; ++k)
            EXPECT_EQ(ep.at(0, c, k), ep.at(1, c, k - 10));
    EXPECT_EQ(rec, before);
}

TEST(Epoch, OutOfBoundsListsOffendingEvents)
{
    auto rec = noise_recording(2, 0, 1000, 250.0, 5);
    rec.events = {{10, 0, "left_hand"}, {500, 0, "feet"}, {990, 0, "tongue"}};
    try {
        (void)epoch(rec, {-0.1, 0.1});
        FAIL() << "expected BoundsError";
    } catch (const BoundsError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("left_hand@10"), std::string::npos);
        EXPECT_NE(msg.find("tongue@990"), std::string::npos);
        EXPECT_EQ(msg.find("feet@500"), std::string::npos);
    }
}

TEST(Epoch, AnchorFilterAndTrialCount)
{
    const auto rec = noise_recording(2, 0, 5000, 250.0, 5, 4, 200);
    EXPECT_EQ(epoch(rec, {0.0, 0.5}).n_trials(), rec.events.size());
    EpochOptions only_feet;
    only_feet.anchor_labels = {"feet"};
    const auto ep = epoch(rec, {0.0, 0.5}, only_feet);
    EXPECT_EQ(ep.n_trials(), 4u);
    for (const int l : ep.labels)
        EXPECT_EQ(l, 2);
}

TEST(Epoch, BaselineCorrectionSubtractsPreWindowMean)
{
    std::vector<double> x(600, 3.0);
    for (std::size_t i = 300; i < 600; ++i)
        x[i] = 10.0;
    auto rec = single_channel(x, 100.0);
    rec.events = {{300, 0, "feet"}};
    EpochOptions opt;
    opt.baseline_s = std::pair{-1.0, 0.0};
    const auto ep = epoch(rec, {0.0, 1.0}, opt);
    for (std::size_t k = 0; k < ep.n_samples; ++k)
        EXPECT_DOUBLE_EQ(ep.at(0, 0, k), 7.0);
}

TEST(Epoch, SubsetAndPickChannelsPreserveValues)
{
    const auto rec = noise_recording(3, 2, 3000, 250.0, 8, 2, 300);
    const auto ep = epoch(rec, {0.0, 0.4});
    const std::vector<std::size_t> trials{5, 1};
    const auto sub = ep.subset(trials);
    EXPECT_EQ(sub.labels, (std::vector<int>{ep.labels[5], ep.labels[1]}));
    EXPECT_EQ(sub.at(0, 2, 7), ep.at(5, 2, 7));
    const auto eog = ep.pick_kind(ChannelKind::EOG);
    EXPECT_EQ(eog.n_channels(), 2u);
    EXPECT_EQ(eog.at(3, 1, 9), ep.at(3, 4, 9));
}
