// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/analysis.hpp>
#include <chatbci/error.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

namespace chatbci {

using nlohmann::json;

namespace {

std::vector<std::string> channel_names(const EpochSet& ep)
{
    std::vector<std::string> names;
    for (const auto& ch : ep.channels)
        names.push_back(ch.name);
    return names;
}

void require_every_class(const EpochSet& ep)
{
    ep.check();
    const auto counts = ep.class_counts();
    for (std::size_t k = 0; k < counts.size(); ++k)
        if (counts[k] == 0)
            throw EmptyClassError("class '" + ep.class_names[k] + "' has no trials");
}

template <typename T>
json table_json(const std::vector<std::string>& classes, const std::vector<std::string>& channels,
                const ClassChannelTable<T>& table)
{
    json j = json::object();
    for (std::size_t k = 0; k < classes.size(); ++k) {
        json row = json::object();
        for (std::size_t c = 0; c < channels.size(); ++c)
            row[channels[c]] = table[k][c];
        j[classes[k]] = std::move(row);
    }
    return j;
}

double median_inplace(std::vector<double>& v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

ClassChannelStats class_channel_stats(const EpochSet& ep, double outlier_k)
{
    require_every_class(ep);
    const auto n_cls = ep.n_classes();
    const auto n_ch = ep.n_channels();
    ClassChannelStats s;
    s.class_names = ep.class_names;
    s.channel_names = channel_names(ep);
    s.outlier_k = outlier_k;
    s.mean.assign(n_cls, std::vector<double>(n_ch, 0.0));
    s.stddev = s.variance = s.mean;

    // Welford accumulation per (class, channel).
    ClassChannelTable<double> m2(n_cls, std::vector<double>(n_ch, 0.0));
    ClassChannelTable<double> count(n_cls, std::vector<double>(n_ch, 0.0));
    for (std::size_t t = 0; t < ep.n_trials(); ++t) {
        const auto k = static_cast<std::size_t>(ep.labels[t]);
        for (std::size_t c = 0; c < n_ch; ++c) {
            double& mean = s.mean[k][c];
            double& acc = m2[k][c];
            double& n = count[k][c];
            for (const double x : ep.series(t, c)) {
                n += 1.0;
                const double d = x - mean;
                mean += d / n;
                acc += d * (x - mean);
            }
        }
    }
    for (std::size_t k = 0; k < n_cls; ++k)
        for (std::size_t c = 0; c < n_ch; ++c) {
            s.variance[k][c] = count[k][c] > 0 ? m2[k][c] / count[k][c] : 0.0;
            s.stddev[k][c] = std::sqrt(s.variance[k][c]);
        }

    s.outlier.assign(ep.n_trials(), false);
    std::vector<double> pool;
    for (std::size_t c = 0; c < n_ch; ++c) {
        pool.clear();
        for (std::size_t t = 0; t < ep.n_trials(); ++t) {
            const auto x = ep.series(t, c);
            pool.insert(pool.end(), x.begin(), x.end());
        }
        const double med = median_inplace(pool);
        for (auto& v : pool)
            v = std::abs(v - med);
        const double mad = median_inplace(pool);
        const double threshold = outlier_k * 1.4826 * mad;
        for (std::size_t t = 0; t < ep.n_trials(); ++t) {
            double peak = 0.0;
            for (const double x : ep.series(t, c))
                peak = std::max(peak, std::abs(x - med));
            if (peak > threshold)
                s.outlier[t] = true;
        }
    }
    return s;
}

json ClassChannelStats::to_json() const
{
    json j;
    j["kind"] = "stats";
    j["mean"] = table_json(class_names, channel_names, mean);
    j["std"] = table_json(class_names, channel_names, stddev);
    j["variance"] = table_json(class_names, channel_names, variance);
    j["outlier_k"] = outlier_k;
    std::vector<std::size_t> flagged;
    for (std::size_t t = 0; t < outlier.size(); ++t)
        if (outlier[t])
            flagged.push_back(t);
    j["outlier_trials"] = flagged;
    j["n_trials"] = outlier.size();
    return j;
}

ErpResult erp(const EpochSet& ep)
{
    require_every_class(ep);
    ErpResult r;
    r.class_names = ep.class_names;
    r.channel_names = channel_names(ep);
    for (const auto& ch : ep.channels)
        r.channel_kinds.push_back(ch.kind);
    r.trial_counts = ep.class_counts();
    r.waveform.assign(ep.n_classes(),
                      std::vector<std::vector<double>>(ep.n_channels(), std::vector<double>(ep.n_samples, 0.0)));
    for (std::size_t t = 0; t < ep.n_trials(); ++t) {
        auto& cls = r.waveform[static_cast<std::size_t>(ep.labels[t])];
        for (std::size_t c = 0; c < ep.n_channels(); ++c) {
            const auto x = ep.series(t, c);
            auto& acc = cls[c];
            for (std::size_t k = 0; k < ep.n_samples; ++k)
                acc[k] += x[k];
        }
    }
    for (std::size_t k = 0; k < ep.n_classes(); ++k) {
        const double inv = 1.0 / static_cast<double>(r.trial_counts[k]);
        for (auto& wave : r.waveform[k])
            for (auto& v : wave)
                v *= inv;
    }
    r.time_ms.resize(ep.n_samples);
    for (std::size_t k = 0; k < ep.n_samples; ++k)
        r.time_ms[k] = 1000.0 * static_cast<double>(k) / ep.sampling_rate_hz;
    return r;
}

std::size_t ErpResult::channel_index(const std::string& name) const
{
    const auto it = std::find(channel_names.begin(), channel_names.end(), name);
    if (it == channel_names.end())
        throw SpecError("channel '" + name + "' is not in the ERP result");
    return static_cast<std::size_t>(it - channel_names.begin());
}

json ErpResult::to_json() const
{
    json j;
    j["kind"] = "erp";
    j["time_ms"] = time_ms;
    j["trial_counts"] = json::object();
    for (std::size_t k = 0; k < class_names.size(); ++k)
        j["trial_counts"][class_names[k]] = trial_counts[k];
    j["channels"] = json::array();
    for (std::size_t c = 0; c < channel_names.size(); ++c)
        j["channels"].push_back({{"name", channel_names[c]}, {"kind", to_string(channel_kinds.at(c))}});
    j["class_order"] = class_names;
    j["erp"] = table_json(class_names, channel_names, waveform);
    return j;
}

ErpResult ErpResult::from_json(const json& j)
{
    ErpResult r;
    r.time_ms = j.at("time_ms").get<std::vector<double>>();
    r.class_names = j.at("class_order").get<std::vector<std::string>>();
    for (const auto& ch : j.at("channels")) {
        r.channel_names.push_back(ch.at("name").get<std::string>());
        r.channel_kinds.push_back(channel_kind_from_string(ch.at("kind").get<std::string>()));
    }
    for (const auto& cls : r.class_names) {
        r.trial_counts.push_back(j.at("trial_counts").at(cls).get<std::size_t>());
        std::vector<std::vector<double>> per_channel;
        for (const auto& ch : r.channel_names)
            per_channel.push_back(j.at("erp").at(cls).at(ch).get<std::vector<double>>());
        r.waveform.push_back(std::move(per_channel));
    }
    return r;
}

std::vector<double> hann_window(std::size_t n)
{
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

PsdResult psd(const EpochSet& ep, const WelchParams& params)
{
    require_every_class(ep);
    const double fs = ep.sampling_rate_hz;
    const auto nper = static_cast<std::size_t>(std::llround(params.segment_s * fs));
    if (nper < 8)
        throw SpecError("Welch segment must span at least 8 samples");
    if (!(params.overlap >= 0.0 && params.overlap < 1.0))
        throw SpecError("Welch overlap must lie in [0, 1)");
    if (nper > ep.n_samples)
        throw SpecError("Welch segment (" + std::to_string(nper) + " samples) is longer than the epoch (" +
                        std::to_string(ep.n_samples) + ")");
    const auto noverlap = static_cast<std::size_t>(std::floor(params.overlap * static_cast<double>(nper)));
    const auto step = nper - noverlap;
    const auto n_seg = (ep.n_samples - nper) / step + 1;
    const auto n_bins = nper / 2 + 1;

    const auto window = hann_window(nper);
    double wss = 0.0;
    for (const double w : window)
        wss += w * w;
    const double scale = 1.0 / (fs * wss);

    PsdResult r;
    r.class_names = ep.class_names;
    r.channel_names = channel_names(ep);
    r.params = params;
    r.segment_samples = nper;
    r.overlap_samples = noverlap;
    r.freq_hz.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k)
        r.freq_hz[k] = static_cast<double>(k) * fs / static_cast<double>(nper);
    r.density.assign(ep.n_classes(), std::vector<std::vector<double>>(ep.n_channels(), std::vector<double>(n_bins, 0.0)));

    std::vector<double> in(nper);
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins));
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nper), in.data(), out, FFTW_ESTIMATE);
    }

    const auto counts = ep.class_counts();
    for (std::size_t t = 0; t < ep.n_trials(); ++t) {
        auto& cls = r.density[static_cast<std::size_t>(ep.labels[t])];
        for (std::size_t c = 0; c < ep.n_channels(); ++c) {
            const auto x = ep.series(t, c);
            auto& acc = cls[c];
            for (std::size_t s = 0; s < n_seg; ++s) {
                for (std::size_t i = 0; i < nper; ++i)
                    in[i] = x[s * step + i] * window[i];
                fftw_execute(plan);
                for (std::size_t k = 0; k < n_bins; ++k) {
                    double p = (out[k][0] * out[k][0] + out[k][1] * out[k][1]) * scale;
                    const bool nyquist = nper % 2 == 0 && k == n_bins - 1;
                    if (k != 0 && !nyquist)
                        p *= 2.0;
                    acc[k] += p;
                }
            }
        }
    }
    for (std::size_t k = 0; k < ep.n_classes(); ++k) {
        const double inv = 1.0 / static_cast<double>(counts[k] * n_seg);
        for (auto& spectrum : r.density[k])
            for (auto& v : spectrum)
                v *= inv;
    }

    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    return r;
}

json PsdResult::to_json() const
{
    json j;
    j["kind"] = "psd";
    j["freq_hz"] = freq_hz;
    j["welch"] = {{"segment_s", params.segment_s},
                  {"overlap", params.overlap},
                  {"window", "hann"},
                  {"segment_samples", segment_samples},
                  {"overlap_samples", overlap_samples}};
    j["psd"] = table_json(class_names, channel_names, density);
    return j;
}

} // namespace chatbci
