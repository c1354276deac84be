// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Every numeric
// reference below is computed by an oracle written here, independent of the
// library code under test.

#include <chatbci/analysis.hpp>
#include <chatbci/data_store.hpp>
#include <chatbci/decoder.hpp>
#include <chatbci/demo.hpp>
#include <chatbci/error.hpp>
#include <chatbci/ideation.hpp>
#include <chatbci/knowledge_base.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/mock_replies.hpp>
#include <chatbci/preprocess.hpp>
#include <chatbci/rng.hpp>
#include <chatbci/synthetic.hpp>
#include <chatbci/training.hpp>
#include <chatbci/util.hpp>
#include <chatbci/workspace.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace chatbci;
using nlohmann::json;

namespace {

constexpr int kSkipCode = 77;

struct Outcome {
    bool pass = false;
    std::string detail;
    bool skipped = false;
};

struct Criterion {
    const char* name;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Accumulates named sub-checks into one outcome.
struct Checks {
    bool ok = true;
    std::vector<std::string> parts;

    void add(bool pass, const std::string& what)
    {
        ok = ok && pass;
        parts.push_back(std::string(pass ? "" : "!") + what);
    }
    Outcome done() const
    {
        std::string d;
        for (const auto& p : parts)
            d += (d.empty() ? "" : "; ") + p;
        return {ok, d};
    }
};

fs::path scratch(const std::string& tag)
{
    auto p = fs::temp_directory_path() / ("chatbci-accept-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    return std::abs(a - b) / scale;
}

// ---------------------------------------------------------------- DSP

// Digital Butterworth magnitude after the bilinear transform with
// pre-warping: 1 / sqrt(1 + (tan(pi f / fs) / tan(pi fc / fs))^(2N)).
double butterworth_lowpass_gain(double f, double fc, double fs, int order)
{
    const double r = std::tan(std::numbers::pi * f / fs) / std::tan(std::numbers::pi * fc / fs);
    return 1.0 / std::sqrt(1.0 + std::pow(r, 2.0 * order));
}

// Amplitude of a sinusoid at f by least squares on sin and cos over x.
double sine_amplitude(std::span<const double> x, double f, double fs)
{
    double ss = 0, cc = 0, sc = 0, xs = 0, xc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ph = 2 * std::numbers::pi * f * static_cast<double>(i) / fs;
        const double s = std::sin(ph), c = std::cos(ph);
        ss += s * s;
        cc += c * c;
        sc += s * c;
        xs += x[i] * s;
        xc += x[i] * c;
    }
    const double det = ss * cc - sc * sc;
    const double a = (xs * cc - xc * sc) / det;
    const double b = (xc * ss - xs * sc) / det;
    return std::hypot(a, b);
}

Outcome dsp_suite()
{
    Checks c;
    SyntheticSessionParams p;
    p.trials_per_class = 12;
    const auto rec = make_synthetic_session(p);
    const auto eeg = rec.channel_indices(ChannelKind::EEG);

    const auto car = common_average_reference(rec);
    double worst_mean = 0;
    for (std::size_t k = 0; k < car.n_samples(); ++k) {
        long double sum = 0;
        for (const auto ch : eeg)
            sum += car.signal(ch, k);
        worst_mean = std::max(worst_mean, static_cast<double>(std::abs(sum / eeg.size())));
    }
    c.add(worst_mean < 1e-6, "CAR max |EEG mean| " + fmt("%.2e", worst_mean) + " uV");

    const auto car2 = common_average_reference(car);
    double idem = 0;
    for (std::size_t i = 0; i < car.signal.values().size(); ++i)
        idem = std::max(idem, std::abs(car2.signal.values()[i] - car.signal.values()[i]));
    c.add(idem < 1e-6, "CAR idempotence max diff " + fmt("%.2e", idem));

    const double fs = rec.sampling_rate_hz;
    const ButterworthFilter lp(FilterSpec::lowpass(40.0), fs);
    const ButterworthFilter hp(FilterSpec::highpass(4.0), fs);
    const double lp_dc = lp.magnitude(0.0), hp_dc = hp.magnitude(0.0);
    // Time domain: a constant input after zero-phase filtering.
    std::vector<double> dc(2000, 5.0);
    const auto lp_out = lp.apply_zero_phase(dc);
    const auto hp_out = hp.apply_zero_phase(dc);
    const double lp_time = lp_out[1000] / 5.0, hp_time = hp_out[1000] / 5.0;
    c.add(std::abs(lp_dc - 1) < 1e-3 && std::abs(lp_time - 1) < 1e-3,
          "low-pass DC gain " + fmt("%.6f", lp_dc) + " (filtered " + fmt("%.6f", lp_time) + ")");
    c.add(std::abs(hp_dc) < 1e-3 && std::abs(hp_time) < 1e-3,
          "high-pass DC gain " + fmt("%.2e", hp_dc) + " (filtered " + fmt("%.2e", hp_time) + ")");

    // 50 Hz through the 40 Hz zero-phase low-pass: squared analytic gain.
    const std::size_t n = 5000;
    std::vector<double> tone(n);
    for (std::size_t i = 0; i < n; ++i)
        tone[i] = std::sin(2 * std::numbers::pi * 50.0 * static_cast<double>(i) / fs + 0.3);
    const auto filtered = lp.apply_zero_phase(tone);
    const double measured = sine_amplitude(std::span(filtered).subspan(1000, 3000), 50.0, fs);
    const double analytic = std::pow(butterworth_lowpass_gain(50.0, 40.0, fs, 4), 2);
    c.add(rel_err(measured, analytic) < 0.05,
          "50 Hz gain " + fmt("%.5f", measured) + " vs analytic " + fmt("%.5f", analytic));

    // Zero phase: cross-correlation of a smooth pulse peaks at lag 0.
    std::vector<double> pulse(1001);
    for (std::size_t i = 0; i < pulse.size(); ++i) {
        const double t = (static_cast<double>(i) - 500.0) / 12.0;
        pulse[i] = std::exp(-0.5 * t * t);
    }
    int best_lag = 999;
    for (const auto* f : {&lp, &hp}) {
        const auto y = f->apply_zero_phase(pulse);
        double best = -INFINITY;
        int lag_at = 0;
        for (int lag = -50; lag <= 50; ++lag) {
            double acc = 0;
            for (int i = 100; i < 900; ++i)
                acc += pulse[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + lag)];
            if (acc > best) {
                best = acc;
                lag_at = lag;
            }
        }
        best_lag = f == &lp ? lag_at : (lag_at == 0 ? best_lag : lag_at);
    }
    c.add(best_lag == 0, "zero-phase peak lag " + std::to_string(best_lag));
    return c.done();
}

// ------------------------------------------------------------ analysis

EpochSet random_epochs(std::size_t per_class, std::size_t channels, std::size_t samples, std::uint64_t seed,
                       double fs)
{
    EpochSet ep;
    ep.sampling_rate_hz = fs;
    ep.n_samples = samples;
    ep.window_s = {0.0, static_cast<double>(samples) / fs};
    ep.class_names = {"left_hand", "right_hand", "feet", "tongue"};
    for (std::size_t c = 0; c < channels; ++c)
        ep.channels.push_back({"E" + std::to_string(c), ChannelKind::EEG, "uV"});
    Rng rng(seed);
    for (std::size_t t = 0; t < 4 * per_class; ++t) {
        ep.labels.push_back(static_cast<int>(rng.uniform_int(0, 3)));
        ep.subjects.push_back("A01");
    }
    for (int k = 0; k < 4; ++k)
        ep.labels[static_cast<std::size_t>(k)] = k;  // no empty class
    ep.data.resize(ep.n_trials() * channels * samples);
    for (auto& v : ep.data)
        v = 10.0 * rng.normal() + 3.0;
    return ep;
}

Outcome analysis_suite()
{
    Checks c;
    const auto ep = random_epochs(20, 5, 400, 17, 250.0);

    // ERP: per-class arithmetic mean, accumulated in long double.
    const auto r = erp(ep);
    double erp_err = 0;
    for (int k = 0; k < 4; ++k)
        for (std::size_t ch = 0; ch < 5; ++ch)
            for (std::size_t i = 0; i < 400; ++i) {
                long double sum = 0;
                std::size_t n = 0;
                for (std::size_t t = 0; t < ep.n_trials(); ++t)
                    if (ep.labels[t] == k) {
                        sum += ep.data[(t * 5 + ch) * 400 + i];
                        ++n;
                    }
                erp_err = std::max(erp_err, rel_err(r.waveform[static_cast<std::size_t>(k)][ch][i],
                                                    static_cast<double>(sum / n)));
            }
    double time_err = 0;
    for (std::size_t i = 0; i < 400; ++i)
        time_err = std::max(time_err, std::abs(r.time_ms[i] - 4.0 * static_cast<double>(i)));
    c.add(erp_err < 1e-9 && time_err < 1e-9, "ERP rel err " + fmt("%.2e", erp_err));

    // Stats: pooled two-pass mean and population variance per class/channel.
    const auto s = class_channel_stats(ep);
    double stat_err = 0;
    for (int k = 0; k < 4; ++k)
        for (std::size_t ch = 0; ch < 5; ++ch) {
            long double sum = 0;
            std::size_t n = 0;
            for (std::size_t t = 0; t < ep.n_trials(); ++t)
                if (ep.labels[t] == k)
                    for (std::size_t i = 0; i < 400; ++i, ++n)
                        sum += ep.data[(t * 5 + ch) * 400 + i];
            const long double mean = sum / n;
            long double sq = 0;
            for (std::size_t t = 0; t < ep.n_trials(); ++t)
                if (ep.labels[t] == k)
                    for (std::size_t i = 0; i < 400; ++i) {
                        const long double d = ep.data[(t * 5 + ch) * 400 + i] - mean;
                        sq += d * d;
                    }
            const auto kk = static_cast<std::size_t>(k);
            stat_err = std::max({stat_err, rel_err(s.mean[kk][ch], static_cast<double>(mean)),
                                 rel_err(s.variance[kk][ch], static_cast<double>(sq / n)),
                                 rel_err(s.stddev[kk][ch], std::sqrt(static_cast<double>(sq / n)))});
        }
    c.add(stat_err < 1e-9, "stats rel err " + fmt("%.2e", stat_err));

    // PSD: Welch by direct DFT, periodic Hann, one-sided density.
    const auto small = random_epochs(3, 2, 300, 19, 100.0);
    const WelchParams wp{0.64, 0.25, WindowKind::hann};
    const auto pr = psd(small, wp);
    const std::size_t n = 64, step = 48, n_seg = (300 - n) / step + 1;
    std::vector<double> w(n);
    double wss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        wss += w[i] * w[i];
    }
    double psd_err = 0;
    for (int k = 0; k < 4; ++k)
        for (std::size_t ch = 0; ch < 2; ++ch)
            for (std::size_t f = 0; f <= n / 2; ++f) {
                long double acc = 0;
                std::size_t count = 0;
                for (std::size_t t = 0; t < small.n_trials(); ++t) {
                    if (small.labels[t] != k)
                        continue;
                    for (std::size_t sgi = 0; sgi < n_seg; ++sgi, ++count) {
                        long double re = 0, im = 0;
                        for (std::size_t i = 0; i < n; ++i) {
                            const long double ang = -2.0L * std::numbers::pi_v<long double> * (f * i) / n;
                            const long double x = small.data[(t * 2 + ch) * 300 + sgi * step + i] * w[i];
                            re += x * std::cos(ang);
                            im += x * std::sin(ang);
                        }
                        acc += (re * re + im * im) / (100.0 * wss) * ((f == 0 || f == n / 2) ? 1 : 2);
                    }
                }
                psd_err = std::max(psd_err, rel_err(pr.density[static_cast<std::size_t>(k)][ch][f],
                                                    static_cast<double>(acc / count)));
            }
    c.add(psd_err < 1e-9, "PSD rel err " + fmt("%.2e", psd_err));

    // White noise of unit variance integrates to 1 within 10%.
    EpochSet noise;
    noise.sampling_rate_hz = 250.0;
    noise.n_samples = 1000;
    noise.class_names = {"noise"};
    noise.channels = {{"X", ChannelKind::EEG, "uV"}};
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
        noise.labels.push_back(0);
        for (int i = 0; i < 1000; ++i)
            noise.data.push_back(rng.normal());
    }
    const auto np = psd(noise);
    double total = 0;
    for (const double v : np.density[0][0])
        total += v;
    total *= np.freq_hz[1] - np.freq_hz[0];
    c.add(std::abs(total - 1.0) < 0.1, "white-noise PSD integral " + fmt("%.4f", total));
    return c.done();
}

// ------------------------------------------------------------- decoder

Outcome decoder_suite()
{
    Checks c;
    const DecoderConfig def;
    auto model = DecoderModel<float>::build(def, 0);
    const std::size_t expected = 6660;
    c.add(model.parameter_count() == expected,
          "parameter count " + std::to_string(model.parameter_count()) + " (expected " + std::to_string(expected) +
              ")");

    const auto g = gradient_check(tiny_decoder_config(2, 40), 0);
    c.add(g.all_finite && g.max_relative_error < 1e-4, "gradient check max rel err " + fmt("%.2e", g.max_relative_error));

    Rng rng(3);
    std::vector<float> x(4 * def.n_channels * def.n_samples);
    for (auto& v : x)
        v = static_cast<float>(rng.normal());
    const auto a = model.forward(x, 4, false);
    const auto b = model.forward(x, 4, false);
    c.add(a == b, "eval-mode forward bit-identical");

    // Eight trials with arbitrary labels at full input size.
    SeparableParams sp;
    sp.trials_per_class = 2;
    sp.n_channels = def.n_channels;
    sp.n_samples = def.n_samples;
    sp.seed = 31;
    const auto eight = make_separable_epochs(sp);
    TrainConfig tc;
    tc.max_epochs = 200;
    tc.early_stop_patience = 200;
    tc.batch_size = 8;
    tc.augmentation = AugmentSpec::none();
    FitHooks hooks;
    std::atomic<bool> stop{false};
    std::size_t reached = 0;
    hooks.stop = &stop;
    hooks.on_epoch = [&](const EpochRecord& e) {
        if (e.train_acc == 1.0 && reached == 0) {
            reached = e.epoch;
            stop = true;
        }
    };
    fit(eight, eight, nullptr, def, tc, hooks);
    c.add(reached > 0 && reached <= 200,
          reached ? "8-trial overfit at epoch " + std::to_string(reached) : std::string("8-trial overfit not reached"));
    return c.done();
}

// ------------------------------------------------------------ synthetic

std::vector<double> band_power(const EpochSet& ep, double f)
{
    std::vector<double> out;
    const double w = 2 * std::numbers::pi * f / ep.sampling_rate_hz;
    for (std::size_t t = 0; t < ep.n_trials(); ++t)
        for (std::size_t ch = 0; ch < 2; ++ch) {
            double s = 0, co = 0;
            const auto x = ep.series(t, ch);
            for (std::size_t i = 0; i < x.size(); ++i) {
                s += x[i] * std::sin(w * static_cast<double>(i));
                co += x[i] * std::cos(w * static_cast<double>(i));
            }
            out.push_back(std::log(s * s + co * co));
        }
    return out;
}

// Multinomial logistic regression by full-batch gradient descent on
// standardized features.
double logistic_accuracy(std::vector<double> xtr, const std::vector<int>& ytr, std::vector<double> xva,
                         const std::vector<int>& yva, std::size_t d, std::size_t k)
{
    std::vector<double> mu(d, 0), sd(d, 0);
    const std::size_t n = ytr.size();
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < d; ++i)
            mu[i] += xtr[t * d + i] / static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t i = 0; i < d; ++i)
            sd[i] += std::pow(xtr[t * d + i] - mu[i], 2) / static_cast<double>(n);
    for (auto& v : sd)
        v = std::sqrt(v) + 1e-12;
    for (auto* x : {&xtr, &xva})
        for (std::size_t j = 0; j < x->size(); ++j)
            (*x)[j] = ((*x)[j] - mu[j % d]) / sd[j % d];

    std::vector<double> w(k * (d + 1), 0.0);
    auto scores = [&](const double* x) {
        std::vector<double> z(k);
        for (std::size_t j = 0; j < k; ++j) {
            z[j] = w[j * (d + 1) + d];
            for (std::size_t i = 0; i < d; ++i)
                z[j] += w[j * (d + 1) + i] * x[i];
        }
        return z;
    };
    for (int it = 0; it < 2000; ++it) {
        std::vector<double> grad(w.size(), 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            auto z = scores(&xtr[t * d]);
            const double m = *std::max_element(z.begin(), z.end());
            double sum = 0;
            for (auto& v : z)
                sum += (v = std::exp(v - m));
            for (std::size_t j = 0; j < k; ++j) {
                const double r = z[j] / sum - (static_cast<int>(j) == ytr[t] ? 1.0 : 0.0);
                for (std::size_t i = 0; i < d; ++i)
                    grad[j * (d + 1) + i] += r * xtr[t * d + i];
                grad[j * (d + 1) + d] += r;
            }
        }
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] -= 0.5 * grad[i] / static_cast<double>(n);
    }
    std::size_t ok = 0;
    for (std::size_t t = 0; t < yva.size(); ++t) {
        const auto z = scores(&xva[t * d]);
        ok += static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()) ==
              static_cast<std::size_t>(yva[t]);
    }
    return static_cast<double>(ok) / static_cast<double>(yva.size());
}

Outcome synthetic_separability()
{
    Checks c;
    const auto ep = make_separable_epochs({});
    const auto [train, val] = split(ep, 0.2, 1);
    const double oracle = logistic_accuracy(band_power(train, 10.0), train.labels, band_power(val, 10.0), val.labels, 2, 4);
    c.add(oracle >= 0.95, "band-power logistic oracle val acc " + fmt("%.3f", oracle));

    DecoderConfig cfg;
    cfg.n_channels = ep.n_channels();
    cfg.n_samples = ep.n_samples;
    cfg.n_classes = ep.n_classes();
    cfg.temporal_filters = 4;
    cfg.spatial_filters = 8;
    cfg.dropout_p = 0.25;
    TrainConfig tc;
    tc.max_epochs = 50;
    tc.early_stop_patience = 50;
    tc.batch_size = 32;
    tc.augmentation = AugmentSpec::none();
    tc.seed = 5;
    const auto result = fit(train, val, nullptr, cfg, tc);
    c.add(result.run.best_val_acc >= 0.90 && result.run.best_epoch <= 50,
          "decoder best val acc " + fmt("%.3f", result.run.best_val_acc) + " at epoch " +
              std::to_string(result.run.best_epoch));
    return c.done();
}

// ------------------------------------------------------------ real data

Outcome iv2a_real_data()
{
    const char* root = std::getenv("CHATBCI_IV2A_DIR");
    if (!root || !*root)
        return {true, "CHATBCI_IV2A_DIR not set (converted IV 2a data required)", true};
    const auto out = scratch("iv2a");
    int above = 0;
    std::string per;
    for (int s = 1; s <= 9; ++s) {
        TrainRequest req;
        req.subject_id = normalize_subject_id(std::to_string(s));
        req.data_root = root;
        req.run_id = "iv2a-" + req.subject_id;
        req.run_dir = out / req.run_id;
        req.train.seed = 0;
        double acc = 0;
        try {
            const auto run = train(req);
            acc = run.eval_accuracy.value_or(0.0);
        } catch (const std::exception& e) {
            per += " " + req.subject_id + "=error(" + e.what() + ")";
            continue;
        }
        above += acc >= 0.31;
        per += " " + req.subject_id + "=" + fmt("%.3f", acc);
    }
    return {above >= 7, std::to_string(above) + "/9 subjects >= 0.31;" + per};
}

// ------------------------------------------------------------- autonomy

class RecordingExecutor : public ActionExecutor
{
public:
    explicit RecordingExecutor(Rng& rng) : rng_(rng) {}
    json execute(const PendingAction& a) override
    {
        executed.push_back(a.action_id);
        if (rng_.bernoulli(0.1))
            throw IOError("simulated executor failure");
        return {{"ok", a.action_id}};
    }
    std::vector<std::string> executed;

private:
    Rng& rng_;
};

Outcome autonomy_audit()
{
    const std::array<ActionKind, 5> kinds{ActionKind::analysis, ActionKind::code, ActionKind::test_generation,
                                          ActionKind::training_run, ActionKind::figure};
    std::size_t violations = 0, replay_mismatch = 0, total_exec = 0, approvals = 0, file_checks = 0;
    const auto dir = scratch("audit");
    for (int seq = 0; seq < 1000; ++seq) {
        Rng rng(static_cast<std::uint64_t>(seq) * 7919 + 1);
        MockProvider provider;
        RecordingExecutor exec(rng);
        SessionOptions opts;
        opts.session_id = "audit" + std::to_string(seq);
        opts.clock = sequence_clock();
        opts.sleep = [](std::chrono::milliseconds) {};
        for (const auto p : all_phases())
            opts.policy.set(p, static_cast<int>(rng.uniform_int(0, 3)));
        if (seq % 100 == 0)
            opts.transcript_path = dir / (opts.session_id + ".jsonl");
        ChatSession session(provider, &exec, opts);

        // Independent model: level in force when each action was proposed.
        std::map<std::string, int> level_at_proposal;
        std::set<std::string> approved;
        std::vector<std::string> ids;
        const int steps = static_cast<int>(rng.uniform_int(5, 40));
        for (int s = 0; s < steps; ++s) {
            const auto op = rng.uniform_int(0, 9);
            try {
                if (op <= 3) {
                    const auto kind = kinds[static_cast<std::size_t>(rng.uniform_int(0, 4))];
                    const auto phase = all_phases()[static_cast<std::size_t>(rng.uniform_int(0, 5))];
                    const int level = session.state().policy.level(phase);
                    const auto a = session.propose(kind, {{"n", s}}, phase);
                    level_at_proposal[a.action_id] = level;
                    ids.push_back(a.action_id);
                } else if (op <= 5 && !ids.empty()) {
                    const auto& id = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
                    const auto before = exec.executed.size();
                    try {
                        session.approve(id);
                        approved.insert(id);
                        ++approvals;
                    } catch (const StateError&) {
                        if (exec.executed.size() != before)
                            ++violations;  // an illegal approval must not execute
                    }
                } else if (op <= 7 && !ids.empty()) {
                    const auto& id = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
                    try {
                        session.reject(id, "audit");
                    } catch (const StateError&) {
                    }
                } else if (op == 8) {
                    session.set_autonomy(all_phases()[static_cast<std::size_t>(rng.uniform_int(0, 5))],
                                         static_cast<int>(rng.uniform_int(0, 3)));
                } else {
                    session.set_phase(all_phases()[static_cast<std::size_t>(rng.uniform_int(0, 5))]);
                }
            } catch (const std::exception&) {
                ++violations;  // no other error is expected
            }
        }
        for (const auto& id : exec.executed) {
            ++total_exec;
            if (level_at_proposal.at(id) <= 1 && !approved.contains(id))
                ++violations;
        }
        // Executions without approval at level <= 1 also must not show up in
        // the final state.
        const auto state = session.state();
        for (const auto& [id, a] : state.actions) {
            const bool ran = a.state == ActionState::executed || a.state == ActionState::failed ||
                             a.state == ActionState::flagged_for_review;
            if (ran && level_at_proposal.at(id) <= 1 && !approved.contains(id))
                ++violations;
            if (level_at_proposal.at(id) == 0 && a.state != ActionState::rejected)
                ++violations;
        }
        if (ChatSession::replay(session.transcript().records()).to_json() != state.to_json())
            ++replay_mismatch;
        if (opts.transcript_path) {
            ++file_checks;
            if (ChatSession::replay(Transcript::read(*opts.transcript_path)).to_json() != state.to_json())
                ++replay_mismatch;
        }
    }
    fs::remove_all(dir);
    return {violations == 0 && replay_mismatch == 0,
            "1000 sequences, " + std::to_string(total_exec) + " executions, " + std::to_string(approvals) +
                " approvals, " + std::to_string(violations) + " unapproved executions at level <= 1, " +
                std::to_string(replay_mismatch) + " replay mismatches (" + std::to_string(file_checks) +
                " replayed from file)"};
}

// ------------------------------------------------------- knowledge base

std::string random_text(Rng& rng, std::size_t words)
{
    static const char* vocab[] = {"eeg", "filter", "motor", "imagery", "cue", "saccade", "band", "power",
                                  "decoder", "trial", "epoch", "artifact", "mu", "beta", "ocular", "latency"};
    std::string out;
    for (std::size_t i = 0; i < words; ++i)
        out += (i ? " " : "") + std::string(vocab[rng.uniform_int(0, 15)]);
    return out;
}

Outcome knowledge_base_suite()
{
    Checks c;
    std::size_t over = 0, bundles = 0;
    for (int store = 0; store < 1000; ++store) {
        Rng rng(static_cast<std::uint64_t>(store) + 101);
        std::vector<KnowledgeDoc> docs;
        const auto n = rng.uniform_int(1, 12);
        for (std::int64_t d = 0; d < n; ++d) {
            KnowledgeDoc doc;
            doc.doc_id = "d" + std::to_string(d);
            doc.tags = {random_text(rng, 1), random_text(rng, 1)};
            const auto w0 = static_cast<std::size_t>(rng.uniform_int(1, 8));
            const auto w1 = w0 + static_cast<std::size_t>(rng.uniform_int(0, 40));
            const auto w2 = w1 + static_cast<std::size_t>(rng.uniform_int(0, 300));
            doc.levels = {random_text(rng, w0), random_text(rng, w1), random_text(rng, w2)};
            docs.push_back(std::move(doc));
        }
        const auto budget = static_cast<std::size_t>(rng.uniform_int(1, 600));
        const auto ranked = retrieve(docs, random_text(rng, 4), docs.size());
        std::vector<KnowledgeDoc> ordered;
        for (const auto& r : ranked)
            ordered.push_back(r.doc);
        const auto bundle = assemble_context(ordered.empty() ? docs : ordered, budget);
        std::size_t recount = 0;
        for (const auto& e : bundle.excerpts)
            recount += (e.text.size() + 3) / 4;
        ++bundles;
        if (bundle.total_tokens > budget || recount > budget || recount != bundle.total_tokens)
            ++over;
    }
    c.add(over == 0, std::to_string(bundles) + " random stores, " + std::to_string(over) + " over budget");

    const fs::path fx = fs::path(CHATBCI_FIXTURES) / "summarize";
    for (int level = 0; level <= 2; ++level) {
        const auto got = summarize_directory(fx / "tree", level);
        const auto want = read_file(fx / ("level" + std::to_string(level) + ".txt"));
        c.add(got == want, "summary level " + std::to_string(level) + (got == want ? " matches golden" : " differs"));
    }
    return c.done();
}

// ------------------------------------------------------------ ideation

std::set<std::string> words_oracle(const std::string& s)
{
    std::set<std::string> out;
    std::string cur;
    for (const char ch : s + " ") {
        if (std::isalnum(static_cast<unsigned char>(ch)))
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        else if (!cur.empty()) {
            out.insert(cur);
            cur.clear();
        }
    }
    return out;
}

Outcome ideation_suite()
{
    Checks c;
    const fs::path fx = fs::path(CHATBCI_FIXTURES) / "ideation";
    const auto parsed = parse_ideas(read_file(fx / "reference_card.txt"));
    const bool exact = parsed.cards.size() == 1 &&
                       parsed.cards[0].research_question ==
                           "What are the optimal EEG frequency bands for decoding, and how do they vary across subjects?" &&
                       parsed.cards[0].gap == "Inconsistent findings on band contributions." &&
                       parsed.cards[0].motivation == "Personalization can improve performance." &&
                       parsed.cards[0].approach == "Perform detailed frequency band analysis.";
    c.add(exact, "reference idea card parses to the four exact fields");

    auto corpus = MockLiteratureClient::from_file(fx / "corpus.json");
    const auto records = corpus.search("", 100);
    double worst = 0;
    std::size_t scored = 0;
    for (std::size_t n = 1; n <= 12; ++n) {
        auto deck = parse_ideas(canned_idea_reply(n));
        for (auto& card : deck.cards) {
            novelty_check(card, corpus);
            const auto q = words_oracle(card.research_question);
            double best = 0;
            for (const auto& r : records) {
                const auto d = words_oracle(r.title + " " + r.abstract);
                std::size_t inter = 0;
                for (const auto& w : q)
                    inter += d.contains(w);
                const auto uni = q.size() + d.size() - inter;
                best = std::max(best, uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0);
            }
            worst = std::max(worst, std::abs(card.novelty_score.value_or(-1.0) - (1.0 - best)));
            ++scored;
        }
    }
    c.add(worst < 1e-12, std::to_string(scored) + " novelty scores, max |diff| vs Jaccard oracle " + fmt("%.1e", worst));
    return c.done();
}

// ------------------------------------------------------- scripted session

Outcome scripted_session_suite()
{
    Checks c;
    std::vector<ScriptedSessionResult> runs;
    std::vector<fs::path> dirs;
    for (int i = 0; i < 2; ++i) {
        const auto dir = scratch("script" + std::to_string(i));
        write_synthetic_dataset(dir / "data", 1, 72, 1);
        Workspace ws({dir / "data", dir / "out", 1});
        const auto kb = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(CHATBCI_KB_DIR));
        runs.push_back(run_scripted_session(ws, kb, dir / "out" / "sessions" / "demo.jsonl"));
        dirs.push_back(dir);
    }
    const auto& a = runs[0];
    c.add(a.complete && runs[1].complete,
          "validate, ERP, figure, tiny training and interpretation completed (" +
              std::to_string(a.transcript.size()) + " transcript records)");
    c.add(a.validation_pass, "validation report pass");
    c.add(a.digest == runs[1].digest, "two runs bit-identical (digest " + to_hex(a.digest) + ")");
    bool mock_only = true;
    for (const auto& rec : a.transcript)
        mock_only = mock_only && !rec.contains("provider_error");
    c.add(mock_only, "mock provider only, no network");
    for (const auto& d : dirs)
        fs::remove_all(d);
    return c.done();
}

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> list{
        {"dsp", "DSP suite", 30, dsp_suite},
        {"analysis", "Analysis oracle suite", 60, analysis_suite},
        {"decoder", "Decoder suite", 300, decoder_suite},
        {"synthetic", "Synthetic separability end-to-end", 600, synthetic_separability},
        {"iv2a", "IV 2a real data (optional)", 36000, iv2a_real_data},
        {"autonomy", "Autonomy audit", 600, autonomy_audit},
        {"knowledge", "Knowledge base", 600, knowledge_base_suite},
        {"ideation", "Ideation offline", 600, ideation_suite},
        {"session", "Full scripted mock session", 600, scripted_session_suite},
    };
    return list;
}

int run_one(const Criterion& cr)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = cr.run();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= cr.budget_s;
    const char* tag = out.skipped ? "SKIP" : (out.pass && in_time ? "PASS" : "FAIL");
    std::printf("%s  %-10s %s (%.1f s of %.0f s): %s\n", tag, cr.name, cr.title, secs, cr.budget_s, out.detail.c_str());
    std::fflush(stdout);
    if (out.skipped)
        return kSkipCode;
    return out.pass && in_time ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args[0] == "--list") {
        for (const auto& c : criteria())
            std::printf("%s\n", c.name);
        return 0;
    }
    std::set<std::string> only;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
        if (args[i] == "--criterion")
            only.insert(args[i + 1]);
    int failures = 0, ran = 0, skipped = 0;
    for (const auto& c : criteria()) {
        if (!only.empty() && !only.contains(c.name))
            continue;
        ++ran;
        const int rc = run_one(c);
        failures += rc == 1;
        skipped += rc == kSkipCode;
    }
    if (ran == 0) {
        std::fprintf(stderr, "error: UsageError: unknown criterion\n");
        return 2;
    }
    if (failures)
        return 1;
    return skipped == ran ? kSkipCode : 0;
}
