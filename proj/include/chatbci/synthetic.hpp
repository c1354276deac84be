// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/data_store.hpp>
#include <chatbci/preprocess.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chatbci {

/// Channel labels of the 22 EEG + 3 EOG montage used by the IV 2a set.
std::vector<ChannelInfo> iv2a_channels();

/// Parameters of a synthetic motor-imagery session shaped like IV 2a:
/// 2 s fixation, a 1.25 s cue, imagery until 6 s, then a short break.
/// Imagery suppresses the 10 Hz rhythm over the contralateral sensorimotor
/// channel (C4 for left hand, C3 for right hand, Cz for feet) and raises it
/// for tongue; every cue evokes a class-independent potential and a small
/// saccade on the EOG channels.
struct SyntheticSessionParams {
    std::string subject_id = "A01";
    Session session = Session::train;
    double sampling_rate_hz = 250.0;
    int trials_per_class = 72;
    std::uint64_t seed = 1;
    double noise_uv = 5.0;
    double mu_uv = 6.0;
    /// Fractional change of mu amplitude during imagery.
    double modulation = 0.6;
};

Recording make_synthetic_session(const SyntheticSessionParams& params);

/// Writes train and eval sessions for subjects A01..A0n under `root`.
void write_synthetic_dataset(const std::filesystem::path& root, int n_subjects, int trials_per_class,
                             std::uint64_t seed = 1);

/// Epochs whose classes differ only in 10 Hz amplitude on two channels.
/// Class k uses amplitude levels[k & 1] on channel 0 and levels[(k >> 1) & 1]
/// on channel 1, with a random phase per trial; all channels carry white
/// Gaussian noise of SD `noise_sd`.
struct SeparableParams {
    std::size_t n_classes = 4;
    std::size_t trials_per_class = 200;
    std::size_t n_channels = 4;
    std::size_t n_samples = 250;
    double sampling_rate_hz = 250.0;
    double frequency_hz = 10.0;
    double low_amplitude = 1.0;
    double high_amplitude = 3.0;
    double noise_sd = 1.0;
    std::uint64_t seed = 7;
};

/// Trials are interleaved by class (0, 1, 2, 3, 0, 1, ...).
EpochSet make_separable_epochs(const SeparableParams& params);

} // namespace chatbci
