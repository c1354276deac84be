// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

enum class ChannelKind { EEG, EOG };
enum class Session { train, eval };

std::string to_string(ChannelKind kind);
std::string to_string(Session session);
ChannelKind channel_kind_from_string(const std::string& s);
Session session_from_string(const std::string& s);

struct ChannelInfo {
    std::string name;
    ChannelKind kind = ChannelKind::EEG;
    std::string unit = "uV";

    bool operator==(const ChannelInfo&) const = default;
};

struct EventMarker {
    std::int64_t onset_sample = 0;
    std::int64_t duration_samples = 0;
    std::string label;

    bool operator==(const EventMarker&) const = default;
};

using ClassMap = std::map<std::string, int>;

/// The four motor-imagery classes of the IV 2a competition set.
ClassMap iv2a_class_map();

/// Row-major channels × samples matrix.
class SignalMatrix
{
public:
    SignalMatrix() = default;
    SignalMatrix(std::size_t channels, std::size_t samples, double fill = 0.0)
        : channels_(channels), samples_(samples), values_(channels * samples, fill)
    {}

    std::size_t channels() const { return channels_; }
    std::size_t samples() const { return samples_; }

    double& operator()(std::size_t c, std::size_t t) { return values_[c * samples_ + t]; }
    double operator()(std::size_t c, std::size_t t) const { return values_[c * samples_ + t]; }

    std::span<double> row(std::size_t c) { return {values_.data() + c * samples_, samples_}; }
    std::span<const double> row(std::size_t c) const { return {values_.data() + c * samples_, samples_}; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool operator==(const SignalMatrix&) const = default;

private:
    std::size_t channels_ = 0;
    std::size_t samples_ = 0;
    std::vector<double> values_;
};

/// One subject-session of EEG/EOG signal (µV) with its event markers.
struct Recording {
    std::string subject_id;
    Session session = Session::train;
    double sampling_rate_hz = 250.0;
    std::vector<ChannelInfo> channels;
    SignalMatrix signal;
    std::vector<EventMarker> events;
    ClassMap class_map;

    std::size_t n_channels() const { return channels.size(); }
    std::size_t n_samples() const { return signal.samples(); }
    std::size_t n_classes() const { return class_map.size(); }
    /// Indices of channels of the given kind, in channel order.
    std::vector<std::size_t> channel_indices(ChannelKind kind) const;
    /// Class names ordered by class index.
    std::vector<std::string> class_names() const;

    bool operator==(const Recording&) const = default;
};

/// Checks the structural invariants (shape, unique names, class indices,
/// event bounds and labels). Throws IntegrityError or LabelError.
void check_invariants(const Recording& rec);

struct ChannelValidation {
    std::string name;
    std::size_t nan_count = 0;
    /// Maximal constant runs lasting at least one second.
    std::size_t flat_segments = 0;
    bool all_flat = false;
    double min_uv = 0.0;
    double max_uv = 0.0;
};

struct ValidationReport {
    std::string subject_id;
    std::string session;
    std::vector<ChannelValidation> channels;
    std::map<std::string, std::size_t> class_event_counts;
    bool pass = false;

    nlohmann::json to_json() const;
    bool operator==(const ValidationReport& other) const { return to_json() == other.to_json(); }
};

/// Loads a recording directory (meta.json, signals.f32, events.tsv).
/// Events are returned sorted by onset.
Recording load_recording(const std::filesystem::path& dir);

/// Writes a recording directory; float64 samples are stored as the nearest
/// float32.
void save_recording(const Recording& rec, const std::filesystem::path& dir);

ValidationReport validate(const Recording& rec);

/// Directory name used for one subject-session inside a dataset root,
/// e.g. "A01_train".
std::string recording_dir_name(const std::string& subject_id, Session session);

/// Accepts "A01" or a bare number ("1" → "A01").
std::string normalize_subject_id(const std::string& subject);

/// Recording directories found directly under a dataset root, sorted.
std::vector<std::filesystem::path> list_recordings(const std::filesystem::path& root);

} // namespace chatbci
