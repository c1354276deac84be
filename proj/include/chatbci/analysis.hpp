// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/preprocess.hpp>

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

/// Indexed [class][channel].
template <typename T>
using ClassChannelTable = std::vector<std::vector<T>>;

struct ClassChannelStats {
    std::vector<std::string> class_names;
    std::vector<std::string> channel_names;
    ClassChannelTable<double> mean;
    ClassChannelTable<double> stddev;
    ClassChannelTable<double> variance;
    /// One flag per trial of the input set.
    std::vector<bool> outlier;
    double outlier_k = 6.0;

    nlohmann::json to_json() const;
};

struct ErpResult {
    std::vector<std::string> class_names;
    std::vector<std::string> channel_names;
    std::vector<ChannelKind> channel_kinds;
    /// [class][channel] → mean waveform (µV).
    ClassChannelTable<std::vector<double>> waveform;
    std::vector<std::size_t> trial_counts;
    /// Milliseconds from the first epoch sample.
    std::vector<double> time_ms;

    std::size_t channel_index(const std::string& name) const;
    nlohmann::json to_json() const;
    static ErpResult from_json(const nlohmann::json& j);
};

enum class WindowKind { hann };

struct WelchParams {
    double segment_s = 1.0;
    double overlap = 0.5;
    WindowKind window = WindowKind::hann;
};

struct PsdResult {
    std::vector<std::string> class_names;
    std::vector<std::string> channel_names;
    /// [class][channel] → density over frequency (µV²/Hz).
    ClassChannelTable<std::vector<double>> density;
    std::vector<double> freq_hz;
    WelchParams params;
    std::size_t segment_samples = 0;
    std::size_t overlap_samples = 0;

    nlohmann::json to_json() const;
};

/// Pooled per-class statistics (population variance) and robust per-trial
/// outlier flags: a trial is flagged when |x - median| on any channel
/// exceeds k · 1.4826 · MAD of that channel.
ClassChannelStats class_channel_stats(const EpochSet& ep, double outlier_k = 6.0);

ErpResult erp(const EpochSet& ep);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

PsdResult psd(const EpochSet& ep, const WelchParams& params = {});

} // namespace chatbci
