// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/rng.hpp>
#include <chatbci/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace chatbci {

std::vector<ChannelInfo> iv2a_channels()
{
    static const char* eeg[] = {"Fz",  "FC3", "FC1", "FCz", "FC2", "FC4", "C5",  "C3",  "C1",  "Cz",  "C2",
                                "C4",  "C6",  "CP3", "CP1", "CPz", "CP2", "CP4", "P1",  "Pz",  "P2",  "POz"};
    std::vector<ChannelInfo> out;
    for (const char* name : eeg)
        out.push_back({name, ChannelKind::EEG, "uV"});
    for (const char* name : {"EOG1", "EOG2", "EOG3"})
        out.push_back({name, ChannelKind::EOG, "uV"});
    return out;
}

Recording make_synthetic_session(const SyntheticSessionParams& p)
{
    Recording rec;
    rec.subject_id = p.subject_id;
    rec.session = p.session;
    rec.sampling_rate_hz = p.sampling_rate_hz;
    rec.channels = iv2a_channels();
    rec.class_map = iv2a_class_map();

    const double fs = p.sampling_rate_hz;
    Rng rng(p.seed * 0x9e3779b97f4a7c15ULL + (p.session == Session::eval ? 17 : 0));

    std::vector<std::string> order;
    for (const auto& name : rec.class_names())
        for (int i = 0; i < p.trials_per_class; ++i)
            order.push_back(name);
    rng.shuffle(order.begin(), order.end());

    const auto trial_len = static_cast<std::int64_t>(std::llround(7.5 * fs));
    const auto lead = static_cast<std::int64_t>(std::llround(3.0 * fs));
    const auto n_samples = static_cast<std::size_t>(lead + trial_len * static_cast<std::int64_t>(order.size()) + lead);
    rec.signal = SignalMatrix(rec.channels.size(), n_samples);

    auto index_of = [&](const char* name) {
        for (std::size_t i = 0; i < rec.channels.size(); ++i)
            if (rec.channels[i].name == name)
                return i;
        return std::size_t{0};
    };
    const auto c3 = index_of("C3"), c4 = index_of("C4"), cz = index_of("Cz");
    const auto fz = index_of("Fz"), pz = index_of("Pz");
    const auto eog1 = index_of("EOG1"), eog3 = index_of("EOG3");

    // Background: AR(1) noise per channel plus a 10 Hz rhythm whose phase
    // drifts slowly.
    std::vector<double> phase(rec.channels.size());
    for (auto& ph : phase)
        ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        double ar = 0.0;
        auto row = rec.signal.row(c);
        for (std::size_t t = 0; t < n_samples; ++t) {
            ar = 0.9 * ar + std::sqrt(1 - 0.81) * rng.normal();
            row[t] = p.noise_uv * ar;
        }
    }

    const auto cue_offset = static_cast<std::int64_t>(std::llround(2.0 * fs));
    const auto cue_len = static_cast<std::int64_t>(std::llround(1.25 * fs));
    std::vector<double> gain_c3(n_samples, 1.0), gain_c4(n_samples, 1.0), gain_cz(n_samples, 1.0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::int64_t start = lead + static_cast<std::int64_t>(i) * trial_len +
                                   rng.uniform_int(0, static_cast<std::int64_t>(0.2 * fs));
        const std::int64_t cue = start + cue_offset;
        rec.events.push_back({cue, cue_len, order[i]});

        const auto mi_begin = static_cast<std::size_t>(cue + static_cast<std::int64_t>(0.5 * fs));
        const auto mi_end = static_cast<std::size_t>(cue + static_cast<std::int64_t>(4.0 * fs));
        const double down = 1.0 - p.modulation;
        const double up = 1.0 + p.modulation;
        for (std::size_t t = mi_begin; t < mi_end && t < n_samples; ++t) {
            if (order[i] == "left_hand")
                gain_c4[t] = down;
            else if (order[i] == "right_hand")
                gain_c3[t] = down;
            else if (order[i] == "feet")
                gain_cz[t] = down;
            else {
                gain_c3[t] = up;
                gain_c4[t] = up;
            }
        }

        // Cue-evoked N1/P2-like complex on midline channels, saccade on EOG.
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(0.8 * fs); ++k) {
            const double ts = static_cast<double>(k) / fs;
            const double n1 = -4.0 * std::exp(-std::pow((ts - 0.1) / 0.03, 2));
            const double p2 = 6.0 * std::exp(-std::pow((ts - 0.25) / 0.05, 2));
            const auto t = static_cast<std::size_t>(cue + k);
            for (const auto c : {fz, cz, pz})
                rec.signal(c, t) += n1 + p2;
            const double sacc = 15.0 / (1.0 + std::exp(-(ts - 0.3) / 0.02)) * std::exp(-std::max(0.0, ts - 0.5) / 0.2);
            rec.signal(eog1, t) += sacc;
            rec.signal(eog3, t) -= sacc;
        }
    }

    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        if (rec.channels[c].kind != ChannelKind::EEG)
            continue;
        const double amp = (c == c3 || c == c4 || c == cz) ? p.mu_uv : 0.3 * p.mu_uv;
        const std::vector<double>* gain = c == c3 ? &gain_c3 : c == c4 ? &gain_c4 : c == cz ? &gain_cz : nullptr;
        double ph = phase[c];
        double smooth = 1.0;
        auto row = rec.signal.row(c);
        for (std::size_t t = 0; t < n_samples; ++t) {
            ph += 2.0 * std::numbers::pi * 10.0 / fs + 0.02 * rng.normal();
            const double target = gain ? (*gain)[t] : 1.0;
            smooth += (target - smooth) * 0.02;
            row[t] += amp * smooth * std::sin(ph);
        }
    }
    return rec;
}

void write_synthetic_dataset(const std::filesystem::path& root, int n_subjects, int trials_per_class,
                             std::uint64_t seed)
{
    for (int s = 1; s <= n_subjects; ++s) {
        for (const auto session : {Session::train, Session::eval}) {
            SyntheticSessionParams params;
            params.subject_id = normalize_subject_id(std::to_string(s));
            params.session = session;
            params.trials_per_class = trials_per_class;
            params.seed = seed * 1000 + static_cast<std::uint64_t>(s);
            save_recording(make_synthetic_session(params), root / recording_dir_name(params.subject_id, session));
        }
    }
}

EpochSet make_separable_epochs(const SeparableParams& p)
{
    if (p.n_classes < 2 || p.n_classes > 4 || p.n_channels < 2)
        throw PreconditionError("separable generator needs 2..4 classes and at least 2 channels");
    EpochSet ep;
    ep.sampling_rate_hz = p.sampling_rate_hz;
    ep.n_samples = p.n_samples;
    ep.window_s = {0.0, static_cast<double>(p.n_samples) / p.sampling_rate_hz};
    for (std::size_t c = 0; c < p.n_channels; ++c)
        ep.channels.push_back({"S" + std::to_string(c), ChannelKind::EEG, "uV"});
    for (std::size_t k = 0; k < p.n_classes; ++k)
        ep.class_names.push_back("class" + std::to_string(k));
    const std::size_t n = p.n_classes * p.trials_per_class;
    ep.data.resize(n * ep.trial_size());
    ep.labels.resize(n);
    ep.subjects.assign(n, "S01");
    Rng rng(p.seed);
    const double levels[2] = {p.low_amplitude, p.high_amplitude};
    const double w = 2.0 * std::numbers::pi * p.frequency_hz / p.sampling_rate_hz;
    for (std::size_t t = 0; t < n; ++t) {
        const auto k = t % p.n_classes;
        ep.labels[t] = static_cast<int>(k);
        const double amp[2] = {levels[k & 1], levels[(k >> 1) & 1]};
        for (std::size_t c = 0; c < p.n_channels; ++c) {
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            auto* row = ep.data.data() + (t * p.n_channels + c) * p.n_samples;
            for (std::size_t i = 0; i < p.n_samples; ++i) {
                row[i] = p.noise_sd * rng.normal();
                if (c < 2)
                    row[i] += amp[c] * std::sin(w * static_cast<double>(i) + phase);
            }
        }
    }
    return ep;
}

} // namespace chatbci
