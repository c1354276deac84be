// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/data_store.hpp>
#include <chatbci/error.hpp>
#include <chatbci/preprocess.hpp>
#include <chatbci/util.hpp>
#include <chatbci/workspace.hpp>

#include <algorithm>
#include <charconv>

namespace chatbci {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool safe_id(const std::string& id)
{
    return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
               return std::isalnum(c) || c == '-' || c == '_';
           });
}

// Highest N among entries of `dir` named <prefix>N or <prefix>N.<ext>.
std::size_t highest_index(const fs::path& dir, const std::string& prefix)
{
    std::size_t best = 0;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        return 0;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        auto name = entry.path().stem().string();
        if (name.rfind(prefix, 0) != 0)
            continue;
        std::size_t n = 0;
        const auto* first = name.data() + prefix.size();
        const auto* last = name.data() + name.size();
        const auto [ptr, err] = std::from_chars(first, last, n);
        if (err == std::errc() && ptr == last)
            best = std::max(best, n);
    }
    return best;
}

std::vector<std::string> subjects_of(const fs::path& data_root, const json& request)
{
    std::vector<std::string> out;
    auto add = [&](const json& v) {
        out.push_back(normalize_subject_id(v.is_number_integer() ? std::to_string(v.get<int>()) : v.get<std::string>()));
    };
    if (request.contains("subjects")) {
        if (!request["subjects"].is_array())
            throw ConfigError("subjects: expected an array");
        for (const auto& v : request["subjects"])
            add(v);
    } else if (request.contains("subject")) {
        add(request["subject"]);
    } else {
        std::set<std::string> found;
        for (const auto& dir : list_recordings(data_root)) {
            const auto name = dir.filename().string();
            found.insert(name.substr(0, name.find('_')));
        }
        out.assign(found.begin(), found.end());
    }
    if (out.empty())
        throw PreconditionError("no recordings under " + data_root.string());
    return out;
}

std::vector<Session> sessions_of(const json& request)
{
    const auto s = request.value("session", std::string("train"));
    if (s == "both")
        return {Session::train, Session::eval};
    return {session_from_string(s)};
}

json summarize_report(const ValidationReport& r)
{
    std::size_t nan = 0, flat = 0;
    for (const auto& c : r.channels) {
        nan += c.nan_count;
        flat += c.flat_segments;
    }
    return {{"pass", r.pass}, {"nan_count", nan}, {"flat_segments", flat}, {"class_event_counts", r.class_event_counts}};
}

} // namespace

std::pair<DecoderConfig, TrainConfig> run_preset(const std::string& name)
{
    DecoderConfig d;
    TrainConfig t;
    if (name == "default")
        return {d, t};
    if (name == "tiny") {
        d = tiny_decoder_config(d.n_channels, d.n_samples);
        t.max_epochs = 3;
        t.early_stop_patience = 3;
        t.batch_size = 32;
        t.learning_rate = 3e-3;
        return {d, t};
    }
    throw ConfigError("preset: unknown preset '" + name + "' (expected default or tiny)");
}

TrainRequest parse_run_request(const json& body)
{
    if (!body.is_object())
        throw ConfigError("body: expected a JSON object");
    TrainRequest req;
    const auto* subject = body.contains("subject_id") ? &body["subject_id"]
                          : body.contains("subject")  ? &body["subject"]
                                                      : nullptr;
    if (!subject || !(subject->is_string() || subject->is_number_integer()))
        throw ConfigError("subject_id: required string");
    req.subject_id = normalize_subject_id(subject->is_string() ? subject->get<std::string>()
                                                               : std::to_string(subject->get<int>()));
    if (body.contains("preset") && !body["preset"].is_string())
        throw ConfigError("preset: expected a string");
    auto [decoder, train] = run_preset(body.value("preset", std::string("default")));

    if (body.contains("decoder_cfg")) {
        if (!body["decoder_cfg"].is_object())
            throw ConfigError("decoder_cfg: expected an object");
        auto merged = decoder.to_json();
        merged.merge_patch(body["decoder_cfg"]);
        decoder = DecoderConfig::from_json(merged);
    }
    auto train_json = train.to_json();
    if (body.contains("train_cfg")) {
        if (!body["train_cfg"].is_object())
            throw ConfigError("train_cfg: expected an object");
        train_json.merge_patch(body["train_cfg"]);
    }
    for (const char* key : {"max_epochs", "seed"})
        if (body.contains(key)) {
            if (!body[key].is_number_unsigned())
                throw ConfigError(std::string(key) + ": expected a non-negative integer");
            train_json[key] = body[key];
        }
    if (body.contains("max_epochs") && !body.contains("train_cfg"))
        train_json["early_stop_patience"] = std::min(train.early_stop_patience, body["max_epochs"].get<std::size_t>());
    train = TrainConfig::from_json(train_json);
    if (body.contains("include_eog")) {
        if (!body["include_eog"].is_boolean())
            throw ConfigError("include_eog: expected a boolean");
        decoder.include_eog = body["include_eog"].get<bool>();
    }
    req.decoder = decoder;
    req.train = train;
    if (body.contains("preprocess"))
        req.preprocess = PreprocessConfig::from_json(body["preprocess"]);
    return req;
}

json run_analysis(const fs::path& data_root, const json& request)
{
    if (!request.is_object())
        throw ConfigError("body: expected a JSON object");
    const auto op = request.contains("op") ? request["op"] : request.value("kind", json());
    if (!op.is_string())
        throw ConfigError("kind: required, one of validate, erp, psd, stats");
    const auto kind = op.get<std::string>();
    if (kind != "validate" && kind != "erp" && kind != "psd" && kind != "stats")
        throw ConfigError("kind: unknown analysis '" + kind + "'");

    const auto subjects = subjects_of(data_root, request);
    const auto sessions = sessions_of(request);
    json out{{"kind", kind}, {"subjects", subjects}};

    if (kind == "validate") {
        json reports = json::array();
        bool pass = true;
        for (const auto& s : subjects)
            for (const auto session : sessions) {
                const auto r = validate(load_recording(data_root / recording_dir_name(s, session)));
                pass = pass && r.pass;
                reports.push_back(r.to_json());
            }
        out["pass"] = pass;
        out["reports"] = std::move(reports);
        return out;
    }

    auto cfg = PreprocessConfig::from_json(request);
    std::vector<EpochSet> sets;
    for (const auto& s : subjects)
        for (const auto session : sessions)
            sets.push_back(preprocess(load_recording(data_root / recording_dir_name(s, session)), cfg));
    const auto epochs = sets.size() == 1 ? std::move(sets.front()) : concatenate(sets);
    out["preprocess"] = cfg.to_json();
    out["n_trials"] = epochs.n_trials();

    if (kind == "erp") {
        out["result"] = erp(epochs).to_json();
    } else if (kind == "psd") {
        WelchParams w;
        w.segment_s = request.value("segment_s", w.segment_s);
        w.overlap = request.value("overlap", w.overlap);
        out["result"] = psd(epochs, w).to_json();
    } else {
        out["result"] = class_channel_stats(epochs, request.value("outlier_k", 6.0)).to_json();
    }
    return out;
}

struct Workspace::RunSlot {
    TrainRequest request;
    TrainRun run;
    bool queued = true;
    std::atomic<bool> stop{false};
};

Workspace::Workspace(WorkspaceConfig config) : config_(std::move(config))
{
    if (config_.max_parallel_runs == 0)
        throw ConfigError("max_parallel_runs: must be at least 1");
    for (const char* sub : {"analyses", "runs", "figures"})
        fs::create_directories(config_.out_root / sub);
    analysis_counter_ = highest_index(config_.out_root / "analyses", "an");
    run_counter_ = highest_index(config_.out_root / "runs", "run");
    for (std::size_t i = 0; i < config_.max_parallel_runs; ++i)
        workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
}

Workspace::~Workspace()
{
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, slot] : runs_)
            slot->stop = true;
    }
    for (auto& w : workers_)
        w.request_stop();
    work_cv_.notify_all();
    workers_.clear();
}

std::string Workspace::next_id(const std::string& prefix, std::size_t& counter, const fs::path&)
{
    return prefix + std::to_string(++counter);
}

json Workspace::execute(const PendingAction& action)
{
    switch (action.kind) {
    case ActionKind::analysis: {
        const auto r = analyze(action.payload);
        json ref{{"report_id", r.at("report_id")}};
        if (r.at("kind") == "validate")
            ref["pass"] = r.at("pass");
        return ref;
    }
    case ActionKind::figure:
        return {{"figure_id", make_figure(action.payload).figure_id}};
    case ActionKind::training_run:
        return {{"run_id", start_run(parse_run_request(action.payload))}};
    case ActionKind::code:
    case ActionKind::test_generation:
        // Generated code stays in the transcript; nothing runs it here.
        return {{"recorded", true}};
    }
    throw StateError("unsupported action kind");
}

json Workspace::analyze(const json& request)
{
    auto doc = run_analysis(config_.data_root, request);
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = next_id("an", analysis_counter_, config_.out_root / "analyses");
        if (doc.at("kind") == "erp")
            latest_erp_ = id;
    }
    doc["report_id"] = id;
    doc["status"] = "finished";
    doc["request"] = request;
    write_file_atomic(config_.out_root / "analyses" / (id + ".json"), doc.dump() + "\n");
    return doc;
}

std::optional<json> Workspace::report(const std::string& report_id) const
{
    if (!safe_id(report_id))
        return std::nullopt;
    const auto path = config_.out_root / "analyses" / (report_id + ".json");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        return std::nullopt;
    return json::parse(read_file(path));
}

std::string Workspace::start_run(const TrainRequest& request)
{
    const auto subject = normalize_subject_id(request.subject_id);
    for (const auto session : {Session::train, Session::eval}) {
        std::error_code ec;
        if (!fs::is_directory(config_.data_root / recording_dir_name(subject, session), ec))
            throw ConfigError("subject_id: no " + to_string(session) + " recording for " + subject);
    }
    auto slot = std::make_unique<RunSlot>();
    slot->request = request;
    std::lock_guard lock(mutex_);
    const auto id = next_id("run", run_counter_, config_.out_root / "runs");
    slot->request.run_id = id;
    slot->request.run_dir = config_.out_root / "runs" / id;
    slot->request.data_root = config_.data_root;
    slot->run.run_id = id;
    slot->run.subject_id = normalize_subject_id(request.subject_id);
    queue_.push_back(slot.get());
    runs_[id] = std::move(slot);
    latest_run_ = id;
    work_cv_.notify_one();
    return id;
}

void Workspace::worker_loop(std::stop_token stop)
{
    while (true) {
        RunSlot* slot = nullptr;
        {
            std::unique_lock lock(mutex_);
            if (!work_cv_.wait(lock, stop, [&] { return !queue_.empty(); }))
                return;
            slot = queue_.front();
            queue_.pop_front();
            slot->queued = false;
        }
        execute_run(*slot);
    }
}

void Workspace::execute_run(RunSlot& slot)
{
    FitHooks hooks;
    hooks.stop = &slot.stop;
    hooks.on_epoch = [&](const EpochRecord& rec) {
        std::lock_guard lock(mutex_);
        slot.run.epochs.push_back(rec);
        if (rec.val_acc > slot.run.best_val_acc) {
            slot.run.best_val_acc = rec.val_acc;
            slot.run.best_epoch = rec.epoch;
        }
    };
    TrainRun result;
    try {
        result = train(slot.request, hooks);
    } catch (const std::exception& e) {
        result = slot.run;
        result.status = RunStatus::failed;
        result.error = e.what();
    }
    json status;
    std::function<void(const json&)> callback;
    {
        std::lock_guard lock(mutex_);
        slot.run = std::move(result);
        status = status_locked(slot);
        callback = finished_callback_;
    }
    done_cv_.notify_all();
    if (callback)
        callback(status);
}

json Workspace::status_locked(const RunSlot& slot) const
{
    auto j = slot.run.to_json();
    if (slot.queued)
        j["status"] = "queued";
    return j;
}

std::optional<json> Workspace::run_status(const std::string& run_id) const
{
    {
        std::lock_guard lock(mutex_);
        if (const auto it = runs_.find(run_id); it != runs_.end())
            return status_locked(*it->second);
    }
    if (!safe_id(run_id) || !fs::is_directory(config_.out_root / "runs" / run_id))
        return std::nullopt;
    return load_run(run_id).to_json();
}

TrainRun Workspace::load_run(const std::string& run_id) const
{
    const auto dir = config_.out_root / "runs" / run_id;
    TrainRun run;
    run.run_id = run_id;
    run.epochs = read_metrics(dir);
    for (const auto& e : run.epochs)
        if (e.val_acc > run.best_val_acc) {
            run.best_val_acc = e.val_acc;
            run.best_epoch = e.epoch;
        }
    std::error_code ec;
    if (fs::is_regular_file(dir / "config.json", ec))
        run.subject_id = json::parse(read_file(dir / "config.json")).value("subject_id", "");
    if (fs::is_regular_file(dir / "confusion.json", ec)) {
        const auto c = json::parse(read_file(dir / "confusion.json"));
        const auto status = c.value("status", std::string("finished"));
        run.status = status == "failed" ? RunStatus::failed : status == "stopped" ? RunStatus::stopped : RunStatus::finished;
        if (c.contains("eval_accuracy") && !c["eval_accuracy"].is_null())
            run.eval_accuracy = c["eval_accuracy"].get<double>();
        run.confusion = c.value("matrix", run.confusion);
    } else {
        // Interrupted by a restart before the run wrote its summary.
        run.status = RunStatus::stopped;
    }
    return run;
}

json Workspace::wait_run(const std::string& run_id)
{
    std::unique_lock lock(mutex_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end())
        throw NotFoundError("run '" + run_id + "' not found");
    auto& slot = *it->second;
    done_cv_.wait(lock, [&] { return !slot.queued && slot.run.status != RunStatus::running; });
    return status_locked(slot);
}

bool Workspace::stop_run(const std::string& run_id)
{
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(run_id);
    if (it == runs_.end())
        return false;
    it->second->stop = true;
    return true;
}

std::vector<std::string> Workspace::run_ids() const
{
    std::set<std::string> ids;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(config_.out_root / "runs", ec))
        ids.insert(e.path().filename().string());
    std::lock_guard lock(mutex_);
    for (const auto& [id, slot] : runs_)
        ids.insert(id);
    std::vector<std::string> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
}

void Workspace::on_run_finished(std::function<void(const json&)> callback)
{
    std::lock_guard lock(mutex_);
    finished_callback_ = std::move(callback);
}

Figure Workspace::make_figure(const json& request)
{
    if (!request.is_object())
        throw ConfigError("body: expected a JSON object");
    const auto type = request.value("type", std::string());
    Figure fig;
    if (type == "erp") {
        auto source = request.value("erp_result_id", std::string("latest"));
        if (source == "latest") {
            std::lock_guard lock(mutex_);
            source = latest_erp_;
        }
        if (source.empty())
            throw PreconditionError("erp_result_id: no ERP analysis has been run");
        const auto doc = report(source);
        if (!doc || doc->value("kind", "") != "erp")
            throw NotFoundError("erp_result_id: '" + source + "' is not an ERP report");
        auto spec = request.value("zoom", false) ? ErpFigureSpec::zoom() : ErpFigureSpec{};
        if (request.contains("spec")) {
            auto merged = spec.to_json();
            merged.merge_patch(request["spec"]);
            spec = ErpFigureSpec::from_json(merged);
        }
        fig = erp_figure(ErpResult::from_json(doc->at("result")), spec);
        fig.sidecar["source"] = {{"report_id", source}};
    } else if (type == "curves") {
        std::vector<std::string> ids;
        if (request.contains("run_ids") && request["run_ids"].is_array())
            ids = request["run_ids"].get<std::vector<std::string>>();
        else {
            std::lock_guard lock(mutex_);
            if (!latest_run_.empty())
                ids.push_back(latest_run_);
        }
        if (ids.empty())
            throw PreconditionError("run_ids: no training run available");
        std::vector<TrainRun> runs;
        for (const auto& id : ids) {
            const auto status = run_status(id);
            if (!status)
                throw NotFoundError("run_ids: run '" + id + "' not found");
            TrainRun r;
            r.run_id = id;
            r.subject_id = status->value("subject_id", "");
            for (const auto& m : status->at("metrics"))
                r.epochs.push_back(EpochRecord::from_json(m));
            runs.push_back(std::move(r));
        }
        fig = curves_figure(runs, CurvesFigureSpec::from_json(request.value("spec", json::object())));
        fig.sidecar["source"] = {{"run_ids", ids}};
    } else {
        throw ConfigError("type: expected erp or curves");
    }
    save_figure(fig, config_.out_root / "figures");
    return fig;
}

std::optional<fs::path> Workspace::figure_png(const std::string& figure_id) const
{
    const auto p = config_.out_root / "figures" / (figure_id + ".png");
    std::error_code ec;
    if (!safe_id(figure_id) || !fs::is_regular_file(p, ec))
        return std::nullopt;
    return p;
}

std::optional<fs::path> Workspace::figure_sidecar(const std::string& figure_id) const
{
    const auto p = config_.out_root / "figures" / (figure_id + ".data.json");
    std::error_code ec;
    if (!safe_id(figure_id) || !fs::is_regular_file(p, ec))
        return std::nullopt;
    return p;
}

json Workspace::datasets() const
{
    json out{{"data_root", config_.data_root.string()}, {"recordings", json::array()}};
    for (const auto& dir : list_recordings(config_.data_root)) {
        json entry{{"name", dir.filename().string()}};
        try {
            const auto rec = load_recording(dir);
            const auto report = validate(rec);
            entry["subject_id"] = rec.subject_id;
            entry["session"] = to_string(rec.session);
            entry["n_channels"] = rec.n_channels();
            entry["n_samples"] = rec.n_samples();
            entry["sampling_rate_hz"] = rec.sampling_rate_hz;
            entry["n_events"] = rec.events.size();
            entry["validation"] = summarize_report(report);
        } catch (const Error& e) {
            entry["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        }
        out["recordings"].push_back(std::move(entry));
    }
    return out;
}

} // namespace chatbci
