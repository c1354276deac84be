// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/data_store.hpp>
#include <chatbci/error.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace chatbci {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::numeric_limits<float>::is_iec559, "float32 container requires IEEE 754");

std::string to_string(ChannelKind kind) { return kind == ChannelKind::EEG ? "EEG" : "EOG"; }
std::string to_string(Session session) { return session == Session::train ? "train" : "eval"; }

ChannelKind channel_kind_from_string(const std::string& s)
{
    if (s == "EEG")
        return ChannelKind::EEG;
    if (s == "EOG")
        return ChannelKind::EOG;
    throw FormatError("unknown channel kind '" + s + "'");
}

Session session_from_string(const std::string& s)
{
    if (s == "train")
        return Session::train;
    if (s == "eval")
        return Session::eval;
    throw FormatError("unknown session '" + s + "'");
}

ClassMap iv2a_class_map()
{
    return {{"left_hand", 0}, {"right_hand", 1}, {"feet", 2}, {"tongue", 3}};
}

std::vector<std::size_t> Recording::channel_indices(ChannelKind kind) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < channels.size(); ++i)
        if (channels[i].kind == kind)
            out.push_back(i);
    return out;
}

std::vector<std::string> Recording::class_names() const
{
    std::vector<std::string> names(class_map.size());
    for (const auto& [name, index] : class_map)
        names.at(static_cast<std::size_t>(index)) = name;
    return names;
}

void check_invariants(const Recording& rec)
{
    if (!(rec.sampling_rate_hz > 0.0))
        throw IntegrityError("sampling_rate_hz must be positive");
    if (rec.signal.channels() != rec.channels.size())
        throw IntegrityError("signal has " + std::to_string(rec.signal.channels()) + " rows but " +
                             std::to_string(rec.channels.size()) + " channels are declared");
    std::set<std::string> names;
    for (const auto& ch : rec.channels)
        if (!names.insert(ch.name).second)
            throw IntegrityError("duplicate channel name '" + ch.name + "'");
    std::set<int> indices;
    for (const auto& [label, index] : rec.class_map) {
        if (index < 0 || index >= static_cast<int>(rec.class_map.size()))
            throw IntegrityError("class index for '" + label + "' out of range");
        if (!indices.insert(index).second)
            throw IntegrityError("class index " + std::to_string(index) + " used twice");
    }
    const auto n = static_cast<std::int64_t>(rec.n_samples());
    for (const auto& ev : rec.events) {
        if (!rec.class_map.contains(ev.label))
            throw LabelError("event label '" + ev.label + "' is not in the class map");
        if (ev.onset_sample < 0 || ev.duration_samples < 0 || ev.onset_sample + ev.duration_samples > n)
            throw IntegrityError("event at sample " + std::to_string(ev.onset_sample) + " exceeds recording");
    }
}

namespace {

json read_json(const fs::path& path)
{
    if (!fs::exists(path))
        throw FormatError("missing " + path.filename().string() + " in " + path.parent_path().string());
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<EventMarker> parse_events(const fs::path& path)
{
    if (!fs::exists(path))
        throw FormatError("missing events.tsv in " + path.parent_path().string());
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("events.tsv has no header row");
    std::vector<EventMarker> events;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty())
            continue;
        const auto cols = split(line, '\t');
        if (cols.size() != 3)
            throw FormatError("events.tsv line " + std::to_string(line_no) + ": expected 3 columns");
        EventMarker ev;
        try {
            std::size_t used = 0;
            ev.onset_sample = std::stoll(cols[0], &used);
            if (used != cols[0].size())
                throw std::invalid_argument("trailing");
            ev.duration_samples = std::stoll(cols[1], &used);
            if (used != cols[1].size())
                throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw FormatError("events.tsv line " + std::to_string(line_no) + ": bad integer");
        }
        ev.label = cols[2];
        events.push_back(std::move(ev));
    }
    return events;
}

float to_le(float v)
{
    if constexpr (std::endian::native == std::endian::little)
        return v;
    auto bits = std::bit_cast<std::uint32_t>(v);
    bits = ((bits & 0xff) << 24) | ((bits & 0xff00) << 8) | ((bits >> 8) & 0xff00) | (bits >> 24);
    return std::bit_cast<float>(bits);
}

} // namespace

Recording load_recording(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw FormatError("recording directory not found: " + dir.string());
    const auto meta = read_json(dir / "meta.json");
    const auto bin_path = dir / "signals.f32";
    if (!fs::exists(bin_path))
        throw FormatError("missing signals.f32 in " + dir.string());

    Recording rec;
    try {
        rec.subject_id = meta.at("subject_id").get<std::string>();
        rec.session = session_from_string(meta.at("session").get<std::string>());
        rec.sampling_rate_hz = meta.at("sampling_rate_hz").get<double>();
        for (const auto& ch : meta.at("channels")) {
            ChannelInfo info;
            info.name = ch.at("name").get<std::string>();
            info.kind = channel_kind_from_string(ch.at("kind").get<std::string>());
            info.unit = ch.value("unit", "uV");
            if (info.unit != "uV")
                throw FormatError("channel " + info.name + " has unit '" + info.unit + "', expected uV");
            rec.channels.push_back(std::move(info));
        }
        for (const auto& [label, index] : meta.at("class_map").items())
            rec.class_map[label] = index.get<int>();
    } catch (const json::exception& e) {
        throw FormatError("meta.json: " + std::string(e.what()));
    }

    const auto n_channels = rec.channels.size();
    const auto bytes = fs::file_size(bin_path);
    if (n_channels == 0)
        throw IntegrityError("meta.json declares no channels");
    if (bytes % (4 * n_channels) != 0)
        throw IntegrityError("signals.f32 size " + std::to_string(bytes) + " is not a multiple of 4 x " +
                             std::to_string(n_channels) + " channels");
    const auto n_samples = bytes / (4 * n_channels);
    if (meta.contains("n_samples") && meta["n_samples"].get<std::uint64_t>() != n_samples)
        throw IntegrityError("meta.json n_samples " + meta["n_samples"].dump() + " disagrees with signals.f32 (" +
                             std::to_string(n_samples) + ")");

    std::vector<float> raw(n_channels * n_samples);
    {
        std::ifstream in(bin_path, std::ios::binary);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
        if (!in)
            throw IOError("short read from " + bin_path.string());
    }
    rec.signal = SignalMatrix(n_channels, n_samples);
    auto& values = rec.signal.values();
    for (std::size_t i = 0; i < raw.size(); ++i)
        values[i] = static_cast<double>(to_le(raw[i]));

    rec.events = parse_events(dir / "events.tsv");
    std::stable_sort(rec.events.begin(), rec.events.end(),
                     [](const EventMarker& a, const EventMarker& b) { return a.onset_sample < b.onset_sample; });
    check_invariants(rec);
    return rec;
}

void save_recording(const Recording& rec, const fs::path& dir)
{
    check_invariants(rec);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IOError("cannot create " + dir.string() + ": " + ec.message());

    json meta;
    meta["subject_id"] = rec.subject_id;
    meta["session"] = to_string(rec.session);
    meta["sampling_rate_hz"] = rec.sampling_rate_hz;
    meta["n_samples"] = rec.n_samples();
    meta["channels"] = json::array();
    for (const auto& ch : rec.channels)
        meta["channels"].push_back({{"name", ch.name}, {"kind", to_string(ch.kind)}, {"unit", ch.unit}});
    meta["class_map"] = json::object();
    for (const auto& [label, index] : rec.class_map)
        meta["class_map"][label] = index;
    write_file(dir / "meta.json", meta.dump(2) + "\n");

    const auto& values = rec.signal.values();
    std::vector<float> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        raw[i] = to_le(static_cast<float>(values[i]));
    write_file(dir / "signals.f32",
               std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(float)));

    std::ostringstream tsv;
    tsv << "onset_sample\tduration_samples\tlabel\n";
    for (const auto& ev : rec.events)
        tsv << ev.onset_sample << '\t' << ev.duration_samples << '\t' << ev.label << '\n';
    write_file(dir / "events.tsv", tsv.str());
}

ValidationReport validate(const Recording& rec)
{
    ValidationReport report;
    report.subject_id = rec.subject_id;
    report.session = to_string(rec.session);
    const auto n = rec.n_samples();
    const auto min_run = static_cast<std::size_t>(std::ceil(rec.sampling_rate_hz));
    bool ok = true;
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
        ChannelValidation cv;
        cv.name = c < rec.channels.size() ? rec.channels[c].name : std::to_string(c);
        cv.min_uv = std::numeric_limits<double>::infinity();
        cv.max_uv = -std::numeric_limits<double>::infinity();
        const auto row = rec.signal.row(c);
        std::size_t run = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = row[t];
            if (std::isnan(v)) {
                ++cv.nan_count;
                run = 0;
                continue;
            }
            cv.min_uv = std::min(cv.min_uv, v);
            cv.max_uv = std::max(cv.max_uv, v);
            run = (t > 0 && row[t - 1] == v) ? run + 1 : 1;
            if (run == min_run)
                ++cv.flat_segments;
        }
        if (cv.min_uv > cv.max_uv)
            cv.min_uv = cv.max_uv = std::numeric_limits<double>::quiet_NaN();
        cv.all_flat = n > 0 && cv.nan_count == 0 && cv.min_uv == cv.max_uv;
        if (cv.nan_count > 0 || cv.all_flat)
            ok = false;
        report.channels.push_back(std::move(cv));
    }
    for (const auto& [label, index] : rec.class_map)
        report.class_event_counts[label] = 0;
    for (const auto& ev : rec.events)
        if (auto it = report.class_event_counts.find(ev.label); it != report.class_event_counts.end())
            ++it->second;
    for (const auto& [label, count] : report.class_event_counts)
        if (count == 0)
            ok = false;
    report.pass = ok;
    return report;
}

json ValidationReport::to_json() const
{
    json j;
    j["subject_id"] = subject_id;
    j["session"] = session;
    j["pass"] = pass;
    j["channels"] = json::array();
    for (const auto& ch : channels) {
        json c = {{"name", ch.name},
                  {"nan_count", ch.nan_count},
                  {"flat_segments", ch.flat_segments},
                  {"all_flat", ch.all_flat}};
        c["min_uv"] = std::isnan(ch.min_uv) ? json(nullptr) : json(ch.min_uv);
        c["max_uv"] = std::isnan(ch.max_uv) ? json(nullptr) : json(ch.max_uv);
        j["channels"].push_back(std::move(c));
    }
    j["class_event_counts"] = class_event_counts;
    return j;
}

std::string recording_dir_name(const std::string& subject_id, Session session)
{
    return subject_id + "_" + to_string(session);
}

std::string normalize_subject_id(const std::string& subject)
{
    if (!subject.empty() && std::all_of(subject.begin(), subject.end(), [](unsigned char c) { return std::isdigit(c); })) {
        const int n = std::stoi(subject);
        char buf[16];
        std::snprintf(buf, sizeof buf, "A%02d", n);
        return buf;
    }
    return subject;
}

std::vector<fs::path> list_recordings(const fs::path& root)
{
    std::vector<fs::path> out;
    if (!fs::is_directory(root))
        throw IOError("dataset root not found: " + root.string());
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
            out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace chatbci
