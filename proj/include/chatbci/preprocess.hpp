// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/data_store.hpp>

#include <complex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

enum class FilterKind { lowpass, highpass, bandpass };

std::string to_string(FilterKind kind);

struct FilterSpec {
    FilterKind kind = FilterKind::lowpass;
    /// One cutoff for low/high-pass, {low, high} for band-pass.
    std::vector<double> cutoff_hz{40.0};
    int order = 4;
    bool zero_phase = true;

    static FilterSpec lowpass(double hz, int order = 4) { return {FilterKind::lowpass, {hz}, order, true}; }
    static FilterSpec highpass(double hz, int order = 4) { return {FilterKind::highpass, {hz}, order, true}; }
    static FilterSpec bandpass(double lo, double hi, int order = 4) { return {FilterKind::bandpass, {lo, hi}, order, true}; }

    /// Throws SpecError if the spec is not realizable at `fs`.
    void check(double sampling_rate_hz) const;

    nlohmann::json to_json() const;
    static FilterSpec from_json(const nlohmann::json& j);
    /// Short token form used on the command line: "lp:40", "hp:4", "bp:8:30".
    static FilterSpec parse(const std::string& token);

    bool operator==(const FilterSpec&) const = default;
};

/// One biquad, a0 normalized to 1. Direct form II transposed.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

/// Digital Butterworth design (bilinear transform with pre-warping) as a
/// cascade of second-order sections.
class ButterworthFilter
{
public:
    ButterworthFilter(const FilterSpec& spec, double sampling_rate_hz);

    const std::vector<Biquad>& sections() const { return sections_; }
    std::complex<double> response(double freq_hz) const;
    double magnitude(double freq_hz) const { return std::abs(response(freq_hz)); }

    /// Causal single pass, starting from rest.
    std::vector<double> apply(std::span<const double> x) const;
    /// Forward-backward pass with odd-reflection padding and steady-state
    /// initial conditions; zero phase, squared magnitude.
    std::vector<double> apply_zero_phase(std::span<const double> x) const;

    std::size_t pad_length() const { return 3 * (2 * sections_.size() + 1); }

private:
    void run(std::vector<double>& x, double initial) const;

    double fs_;
    std::vector<Biquad> sections_;
    /// Steady-state state for a unit step, per section.
    std::vector<std::pair<double, double>> step_state_;
};

/// Subtracts the EEG-channel mean at every sample from each EEG channel.
/// EOG channels pass through unchanged.
Recording common_average_reference(const Recording& rec);

Recording filter_signal(const Recording& rec, const FilterSpec& spec);

/// Trials × channels × samples, row-major.
struct EpochSet {
    std::vector<double> data;
    std::vector<int> labels;
    std::pair<double, double> window_s{0.0, 4.0};
    double sampling_rate_hz = 250.0;
    std::vector<ChannelInfo> channels;
    std::vector<std::string> class_names;
    /// Source subject per trial (useful once several subjects are pooled).
    std::vector<std::string> subjects;
    std::size_t n_samples = 0;

    std::size_t n_trials() const { return labels.size(); }
    std::size_t n_channels() const { return channels.size(); }
    std::size_t n_classes() const { return class_names.size(); }
    std::size_t trial_size() const { return n_channels() * n_samples; }

    double at(std::size_t trial, std::size_t ch, std::size_t k) const
    {
        return data[(trial * n_channels() + ch) * n_samples + k];
    }
    std::span<const double> trial(std::size_t t) const { return {data.data() + t * trial_size(), trial_size()}; }
    std::span<double> trial(std::size_t t) { return {data.data() + t * trial_size(), trial_size()}; }
    std::span<const double> series(std::size_t t, std::size_t ch) const
    {
        return {data.data() + (t * n_channels() + ch) * n_samples, n_samples};
    }

    /// Trials whose label matches `cls`, in order.
    std::vector<std::size_t> trials_of_class(int cls) const;
    std::vector<std::size_t> class_counts() const;

    /// New set holding the given trials in the given order.
    EpochSet subset(std::span<const std::size_t> trials) const;
    /// New set restricted to the given channel indices.
    EpochSet pick_channels(std::span<const std::size_t> channel_indices) const;
    EpochSet pick_kind(ChannelKind kind) const;

    /// Order-sensitive fingerprint of data and labels.
    std::uint64_t fingerprint() const;

    /// Throws ShapeError if the stored sizes disagree.
    void check() const;
};

/// Appends trials of several sets with identical channels and window.
EpochSet concatenate(std::span<const EpochSet> sets);

struct EpochOptions {
    /// Event labels to anchor on; empty means every class in the class map.
    std::set<std::string> anchor_labels;
    /// Per-trial mean over this window (seconds, relative to the anchor) is
    /// subtracted when set.
    std::optional<std::pair<double, double>> baseline_s;
};

EpochSet epoch(const Recording& rec, std::pair<double, double> window_s, const EpochOptions& options = {});

/// Reusable chain: optional CAR, then filters in order, then epoching.
struct PreprocessConfig {
    bool car = true;
    std::vector<FilterSpec> filters{FilterSpec::lowpass(40.0)};
    std::pair<double, double> window_s{0.0, 4.0};
    std::optional<std::pair<double, double>> baseline_s;

    nlohmann::json to_json() const;
    static PreprocessConfig from_json(const nlohmann::json& j);
};

Recording condition(const Recording& rec, const PreprocessConfig& config);
EpochSet preprocess(const Recording& rec, const PreprocessConfig& config);

} // namespace chatbci
