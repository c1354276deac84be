// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/preprocess.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace chatbci {

using cplx = std::complex<double>;
using nlohmann::json;

std::string to_string(FilterKind kind)
{
    switch (kind) {
    case FilterKind::lowpass: return "lowpass";
    case FilterKind::highpass: return "highpass";
    case FilterKind::bandpass: return "bandpass";
    }
    return "?";
}

void FilterSpec::check(double fs) const
{
    const double nyquist = fs / 2.0;
    if (order < 1)
        throw SpecError("filter order must be positive");
    const std::size_t expected = kind == FilterKind::bandpass ? 2 : 1;
    if (cutoff_hz.size() != expected)
        throw SpecError(to_string(kind) + " needs " + std::to_string(expected) + " cutoff(s)");
    for (const double c : cutoff_hz) {
        if (!(c > 0.0))
            throw SpecError("cutoff must be positive");
        if (!(c < nyquist))
            throw SpecError("cutoff " + std::to_string(c) + " Hz is not below Nyquist (" + std::to_string(nyquist) +
                            " Hz)");
    }
    if (kind == FilterKind::bandpass && !(cutoff_hz[0] < cutoff_hz[1]))
        throw SpecError("band-pass low cutoff must be below the high cutoff");
}

json FilterSpec::to_json() const
{
    return {{"kind", to_string(kind)}, {"cutoff_hz", cutoff_hz}, {"order", order}, {"zero_phase", zero_phase}};
}

FilterSpec FilterSpec::from_json(const json& j)
{
    FilterSpec spec;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "lowpass")
        spec.kind = FilterKind::lowpass;
    else if (kind == "highpass")
        spec.kind = FilterKind::highpass;
    else if (kind == "bandpass")
        spec.kind = FilterKind::bandpass;
    else
        throw SpecError("unknown filter kind '" + kind + "'");
    const auto& c = j.at("cutoff_hz");
    spec.cutoff_hz = c.is_array() ? c.get<std::vector<double>>() : std::vector<double>{c.get<double>()};
    spec.order = j.value("order", 4);
    spec.zero_phase = j.value("zero_phase", true);
    return spec;
}

FilterSpec FilterSpec::parse(const std::string& token)
{
    const auto parts = split(token, ':');
    try {
        if (parts.size() == 2 && parts[0] == "lp")
            return lowpass(std::stod(parts[1]));
        if (parts.size() == 2 && parts[0] == "hp")
            return highpass(std::stod(parts[1]));
        if (parts.size() == 3 && parts[0] == "bp")
            return bandpass(std::stod(parts[1]), std::stod(parts[2]));
    } catch (const std::logic_error&) {
    }
    throw SpecError("cannot parse filter '" + token + "' (expected lp:F, hp:F or bp:LO:HI)");
}

namespace {

cplx eval_section(const Biquad& s, cplx z)
{
    const cplx zi = 1.0 / z;
    return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

} // namespace

ButterworthFilter::ButterworthFilter(const FilterSpec& spec, double fs) : fs_(fs)
{
    spec.check(fs);
    const int n = spec.order;
    const double k2 = 2.0 * fs;
    auto warp = [&](double hz) { return k2 * std::tan(std::numbers::pi * hz / fs); };

    std::vector<cplx> prototype;
    for (int k = 0; k < n; ++k)
        prototype.push_back(std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n)));

    // Analog poles, then map each through the bilinear transform.
    std::vector<cplx> poles;
    int zero_at_minus_one = 0;
    int zero_at_plus_one = 0;
    double norm_freq = 0.0;
    switch (spec.kind) {
    case FilterKind::lowpass: {
        const double wc = warp(spec.cutoff_hz[0]);
        for (const auto& p : prototype)
            poles.push_back(wc * p);
        zero_at_minus_one = n;
        norm_freq = 0.0;
        break;
    }
    case FilterKind::highpass: {
        const double wc = warp(spec.cutoff_hz[0]);
        for (const auto& p : prototype)
            poles.push_back(wc / p);
        zero_at_plus_one = n;
        norm_freq = fs / 2.0;
        break;
    }
    case FilterKind::bandpass: {
        const double w1 = warp(spec.cutoff_hz[0]);
        const double w2 = warp(spec.cutoff_hz[1]);
        const double bw = w2 - w1;
        const double w0 = std::sqrt(w1 * w2);
        for (const auto& p : prototype) {
            const cplx half = p * bw / 2.0;
            const cplx root = std::sqrt(half * half - w0 * w0);
            poles.push_back(half + root);
            poles.push_back(half - root);
        }
        zero_at_minus_one = n;
        zero_at_plus_one = n;
        norm_freq = std::atan(w0 / k2) * fs / std::numbers::pi;
        break;
    }
    }

    std::vector<cplx> zpoles;
    for (const auto& p : poles)
        zpoles.push_back((k2 + p) / (k2 - p));

    // Pair conjugates: keep poles with Im > 0 (each stands for its pair) and
    // real poles separately.
    std::vector<cplx> upper;
    std::vector<double> real;
    for (const auto& p : zpoles) {
        if (std::abs(p.imag()) < 1e-12 * std::max(1.0, std::abs(p)))
            real.push_back(p.real());
        else if (p.imag() > 0)
            upper.push_back(p);
    }
    std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });

    auto take_zero_pair = [&](double& b1, double& b2, int count) {
        // Numerator (1 - r1 z^-1)(1 - r2 z^-1) with r ∈ {+1, -1}.
        std::vector<double> roots;
        while (count-- > 0) {
            if (zero_at_minus_one > 0) {
                roots.push_back(-1.0);
                --zero_at_minus_one;
            } else if (zero_at_plus_one > 0) {
                roots.push_back(1.0);
                --zero_at_plus_one;
            }
        }
        if (roots.size() == 2) {
            b1 = -(roots[0] + roots[1]);
            b2 = roots[0] * roots[1];
        } else if (roots.size() == 1) {
            b1 = -roots[0];
            b2 = 0;
        }
    };

    for (const auto& p : upper) {
        Biquad s;
        s.a1 = -2.0 * p.real();
        s.a2 = std::norm(p);
        // Band-pass sections each take one zero at +1 and one at -1.
        if (spec.kind == FilterKind::bandpass) {
            s.b1 = 0.0;
            s.b2 = -1.0;
        } else {
            take_zero_pair(s.b1, s.b2, 2);
        }
        sections_.push_back(s);
    }
    for (std::size_t i = 0; i < real.size(); i += 2) {
        Biquad s;
        if (i + 1 < real.size()) {
            s.a1 = -(real[i] + real[i + 1]);
            s.a2 = real[i] * real[i + 1];
            if (spec.kind == FilterKind::bandpass) {
                s.b1 = 0.0;
                s.b2 = -1.0;
            } else {
                take_zero_pair(s.b1, s.b2, 2);
            }
        } else {
            s.a1 = -real[i];
            s.a2 = 0.0;
            take_zero_pair(s.b1, s.b2, 1);
        }
        sections_.push_back(s);
    }

    // Normalize to unit gain at DC, Nyquist or the band centre.
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * norm_freq / fs);
    for (auto& s : sections_) {
        const double g = std::abs(eval_section(s, z));
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }

    // Steady state for a unit step, cascaded through the DC gains.
    double input_level = 1.0;
    for (const auto& s : sections_) {
        const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double out = dc * input_level;
        const double z2 = s.b2 * input_level - s.a2 * out;
        const double z1 = s.b1 * input_level - s.a1 * out + z2;
        step_state_.emplace_back(z1, z2);
        input_level = out;
    }
}

cplx ButterworthFilter::response(double freq_hz) const
{
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / fs_);
    cplx h = 1.0;
    for (const auto& s : sections_)
        h *= eval_section(s, z);
    return h;
}

void ButterworthFilter::run(std::vector<double>& x, double initial) const
{
    for (std::size_t si = 0; si < sections_.size(); ++si) {
        const auto& s = sections_[si];
        double z1 = step_state_[si].first * initial;
        double z2 = step_state_[si].second * initial;
        for (auto& v : x) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
}

std::vector<double> ButterworthFilter::apply(std::span<const double> x) const
{
    std::vector<double> y(x.begin(), x.end());
    run(y, 0.0);
    return y;
}

std::vector<double> ButterworthFilter::apply_zero_phase(std::span<const double> x) const
{
    const std::size_t n = x.size();
    if (n == 0)
        return {};
    const std::size_t pad = std::min(pad_length(), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i)
        ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i)
        ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    run(ext, ext.front());
    std::reverse(ext.begin(), ext.end());
    run(ext, ext.front());
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

Recording common_average_reference(const Recording& rec)
{
    const auto eeg = rec.channel_indices(ChannelKind::EEG);
    if (eeg.size() < 2)
        throw PreconditionError("common average reference needs at least 2 EEG channels, found " +
                                std::to_string(eeg.size()));
    Recording out = rec;
    const double inv = 1.0 / static_cast<double>(eeg.size());
    for (std::size_t t = 0; t < rec.n_samples(); ++t) {
        double mean = 0.0;
        for (const auto c : eeg)
            mean += rec.signal(c, t);
        mean *= inv;
        for (const auto c : eeg)
            out.signal(c, t) = rec.signal(c, t) - mean;
    }
    return out;
}

Recording filter_signal(const Recording& rec, const FilterSpec& spec)
{
    const ButterworthFilter filter(spec, rec.sampling_rate_hz);
    Recording out = rec;
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
        const auto y = spec.zero_phase ? filter.apply_zero_phase(rec.signal.row(c)) : filter.apply(rec.signal.row(c));
        std::copy(y.begin(), y.end(), out.signal.row(c).begin());
    }
    return out;
}

std::vector<std::size_t> EpochSet::trials_of_class(int cls) const
{
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < labels.size(); ++t)
        if (labels[t] == cls)
            out.push_back(t);
    return out;
}

std::vector<std::size_t> EpochSet::class_counts() const
{
    std::vector<std::size_t> counts(n_classes(), 0);
    for (const int l : labels)
        ++counts.at(static_cast<std::size_t>(l));
    return counts;
}

EpochSet EpochSet::subset(std::span<const std::size_t> trials) const
{
    EpochSet out = *this;
    out.data.clear();
    out.labels.clear();
    out.subjects.clear();
    out.data.reserve(trials.size() * trial_size());
    for (const auto t : trials) {
        const auto src = trial(t);
        out.data.insert(out.data.end(), src.begin(), src.end());
        out.labels.push_back(labels[t]);
        if (!subjects.empty())
            out.subjects.push_back(subjects[t]);
    }
    return out;
}

EpochSet EpochSet::pick_channels(std::span<const std::size_t> channel_indices) const
{
    EpochSet out = *this;
    out.channels.clear();
    for (const auto c : channel_indices)
        out.channels.push_back(channels.at(c));
    out.data.assign(n_trials() * channel_indices.size() * n_samples, 0.0);
    for (std::size_t t = 0; t < n_trials(); ++t)
        for (std::size_t i = 0; i < channel_indices.size(); ++i) {
            const auto src = series(t, channel_indices[i]);
            std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>((t * channel_indices.size() + i) * n_samples));
        }
    return out;
}

EpochSet EpochSet::pick_kind(ChannelKind kind) const
{
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < channels.size(); ++c)
        if (channels[c].kind == kind)
            idx.push_back(c);
    return pick_channels(idx);
}

std::uint64_t EpochSet::fingerprint() const
{
    auto h = fnv1a(data.data(), data.size() * sizeof(double));
    return fnv1a(labels.data(), labels.size() * sizeof(int), h);
}

void EpochSet::check() const
{
    if (data.size() != n_trials() * trial_size())
        throw ShapeError("epoch data size " + std::to_string(data.size()) + " != trials x channels x samples");
    if (!subjects.empty() && subjects.size() != labels.size())
        throw ShapeError("subject list length differs from trial count");
    for (const int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= n_classes())
            throw ShapeError("label " + std::to_string(l) + " out of range");
}

EpochSet concatenate(std::span<const EpochSet> sets)
{
    if (sets.empty())
        return {};
    EpochSet out = sets.front();
    if (out.subjects.empty())
        out.subjects.assign(out.n_trials(), std::string{});
    for (std::size_t i = 1; i < sets.size(); ++i) {
        const auto& s = sets[i];
        if (s.channels != out.channels || s.n_samples != out.n_samples || s.class_names != out.class_names ||
            s.sampling_rate_hz != out.sampling_rate_hz)
            throw ShapeError("cannot concatenate epoch sets with different channels, lengths or classes");
        out.data.insert(out.data.end(), s.data.begin(), s.data.end());
        out.labels.insert(out.labels.end(), s.labels.begin(), s.labels.end());
        if (s.subjects.empty())
            out.subjects.insert(out.subjects.end(), s.n_trials(), std::string{});
        else
            out.subjects.insert(out.subjects.end(), s.subjects.begin(), s.subjects.end());
    }
    return out;
}

EpochSet epoch(const Recording& rec, std::pair<double, double> window_s, const EpochOptions& options)
{
    const auto [start, end] = window_s;
    if (!(start < end))
        throw BoundsError("epoch window start must be below end");
    const double fs = rec.sampling_rate_hz;
    const auto offset = static_cast<std::int64_t>(std::llround(start * fs));
    const auto length = static_cast<std::int64_t>(std::llround((end - start) * fs));
    if (length <= 0)
        throw BoundsError("epoch window shorter than one sample");

    std::optional<std::pair<std::int64_t, std::int64_t>> baseline;
    if (options.baseline_s) {
        const auto b0 = static_cast<std::int64_t>(std::llround(options.baseline_s->first * fs));
        const auto b1 = static_cast<std::int64_t>(std::llround(options.baseline_s->second * fs));
        if (b1 <= b0)
            throw BoundsError("baseline window must have positive length");
        baseline.emplace(b0, b1);
    }

    EpochSet out;
    out.window_s = window_s;
    out.sampling_rate_hz = fs;
    out.channels = rec.channels;
    out.class_names = rec.class_names();
    out.n_samples = static_cast<std::size_t>(length);

    const auto n_total = static_cast<std::int64_t>(rec.n_samples());
    std::ostringstream offending;
    std::size_t n_bad = 0;
    std::vector<const EventMarker*> anchors;
    for (const auto& ev : rec.events) {
        if (!options.anchor_labels.empty() && !options.anchor_labels.contains(ev.label))
            continue;
        if (!rec.class_map.contains(ev.label))
            continue;
        const auto first = ev.onset_sample + offset;
        bool bad = first < 0 || first + length > n_total;
        if (baseline)
            bad = bad || ev.onset_sample + baseline->first < 0 || ev.onset_sample + baseline->second > n_total;
        if (bad) {
            offending << (n_bad++ ? ", " : "") << ev.label << "@" << ev.onset_sample;
            continue;
        }
        anchors.push_back(&ev);
    }
    if (n_bad > 0)
        throw BoundsError("epoch window exceeds recording for " + std::to_string(n_bad) + " event(s): " +
                          offending.str());

    const auto n_ch = rec.n_channels();
    out.data.resize(anchors.size() * n_ch * out.n_samples);
    for (std::size_t t = 0; t < anchors.size(); ++t) {
        const auto* ev = anchors[t];
        out.labels.push_back(rec.class_map.at(ev->label));
        out.subjects.push_back(rec.subject_id);
        for (std::size_t c = 0; c < n_ch; ++c) {
            const auto row = rec.signal.row(c);
            double base = 0.0;
            if (baseline) {
                for (auto k = baseline->first; k < baseline->second; ++k)
                    base += row[static_cast<std::size_t>(ev->onset_sample + k)];
                base /= static_cast<double>(baseline->second - baseline->first);
            }
            auto* dst = out.data.data() + (t * n_ch + c) * out.n_samples;
            const auto first = static_cast<std::size_t>(ev->onset_sample + offset);
            for (std::size_t k = 0; k < out.n_samples; ++k)
                dst[k] = row[first + k] - base;
        }
    }
    return out;
}

json PreprocessConfig::to_json() const
{
    json j;
    j["car"] = car;
    j["filters"] = json::array();
    for (const auto& f : filters)
        j["filters"].push_back(f.to_json());
    j["window_s"] = {window_s.first, window_s.second};
    j["baseline_s"] = baseline_s ? json{baseline_s->first, baseline_s->second} : json(nullptr);
    return j;
}

PreprocessConfig PreprocessConfig::from_json(const json& j)
{
    PreprocessConfig cfg;
    cfg.car = j.value("car", cfg.car);
    if (j.contains("filters")) {
        cfg.filters.clear();
        for (const auto& f : j["filters"])
            cfg.filters.push_back(f.is_string() ? FilterSpec::parse(f.get<std::string>()) : FilterSpec::from_json(f));
    }
    if (j.contains("window_s")) {
        const auto w = j["window_s"].get<std::vector<double>>();
        if (w.size() != 2)
            throw SpecError("window_s needs two values");
        cfg.window_s = {w[0], w[1]};
    }
    if (j.contains("baseline_s") && !j["baseline_s"].is_null()) {
        const auto b = j["baseline_s"].get<std::vector<double>>();
        if (b.size() != 2)
            throw SpecError("baseline_s needs two values");
        cfg.baseline_s = std::pair{b[0], b[1]};
    }
    return cfg;
}

Recording condition(const Recording& rec, const PreprocessConfig& config)
{
    Recording out = config.car ? common_average_reference(rec) : rec;
    for (const auto& f : config.filters)
        out = filter_signal(out, f);
    return out;
}

EpochSet preprocess(const Recording& rec, const PreprocessConfig& config)
{
    EpochOptions options;
    options.baseline_s = config.baseline_s;
    return epoch(condition(rec, config), config.window_s, options);
}

} // namespace chatbci
