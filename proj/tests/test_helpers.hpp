// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/data_store.hpp>
#include <chatbci/preprocess.hpp>
#include <chatbci/rng.hpp>

#include <filesystem>
#include <unistd.h>
#include <string>

namespace chatbci::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag = "chatbci")
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

/// Recording with `n_eeg` EEG + `n_eog` EOG channels of Gaussian noise and
/// `per_class` events per IV 2a class, spaced `spacing` samples apart.
inline Recording noise_recording(std::size_t n_eeg, std::size_t n_eog, std::size_t n_samples, double fs,
                                 std::uint64_t seed, int per_class = 0, std::int64_t spacing = 0)
{
    Recording rec;
    rec.subject_id = "T01";
    rec.sampling_rate_hz = fs;
    for (std::size_t i = 0; i < n_eeg; ++i)
        rec.channels.push_back({"E" + std::to_string(i), ChannelKind::EEG, "uV"});
    for (std::size_t i = 0; i < n_eog; ++i)
        rec.channels.push_back({"EOG" + std::to_string(i + 1), ChannelKind::EOG, "uV"});
    rec.class_map = iv2a_class_map();
    rec.signal = SignalMatrix(rec.channels.size(), n_samples);
    Rng rng(seed);
    for (auto& v : rec.signal.values())
        v = 10.0 * rng.normal();
    const auto names = rec.class_names();
    std::int64_t onset = spacing;
    for (int i = 0; i < per_class; ++i)
        for (const auto& name : names) {
            rec.events.push_back({onset, 0, name});
            onset += spacing;
        }
    return rec;
}

} // namespace chatbci::testing
