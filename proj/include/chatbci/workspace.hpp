// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/analysis.hpp>
#include <chatbci/figures.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/training.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

struct WorkspaceConfig {
    /// Converted recordings (<subject>_<session> directories).
    std::filesystem::path data_root = "data";
    /// Holds analyses/, runs/ and figures/.
    std::filesystem::path out_root = "out";
    std::size_t max_parallel_runs = 1;
};

/// Decoder and training settings of a named preset ("default" or "tiny").
/// Throws ConfigError for unknown names.
std::pair<DecoderConfig, TrainConfig> run_preset(const std::string& name);

/// Parses a run request: {subject_id|subject, preset?, decoder_cfg?,
/// train_cfg?, include_eog?, max_epochs?, seed?}. Fields of decoder_cfg and
/// train_cfg override the preset. Throws ConfigError naming the field.
TrainRequest parse_run_request(const nlohmann::json& body);

/// Runs an analysis request {op|kind: validate|erp|psd|stats, subject(s)?,
/// session?, car?, filters?, window_s?, baseline_s?, segment_s?, overlap?,
/// outlier_k?} against a dataset root and returns its result document.
nlohmann::json run_analysis(const std::filesystem::path& data_root, const nlohmann::json& request);

/// Artifact store and action executor shared by the service, the CLI and
/// chat sessions. Analyses run synchronously; training runs go through a
/// bounded pool of background workers.
class Workspace : public ActionExecutor
{
public:
    explicit Workspace(WorkspaceConfig config);
    ~Workspace() override;
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const WorkspaceConfig& config() const { return config_; }

    /// Dispatches an approved or auto-executed action; returns the result
    /// reference ({"report_id"}, {"figure_id"} or {"run_id"}).
    nlohmann::json execute(const PendingAction& action) override;

    /// Runs and stores an analysis; returns {report_id, kind, status, result}.
    nlohmann::json analyze(const nlohmann::json& request);
    std::optional<nlohmann::json> report(const std::string& report_id) const;

    /// Queues a training run and returns its id ("run1", "run2", ...).
    /// Throws ConfigError when the subject lacks a train or eval recording.
    std::string start_run(const TrainRequest& request);
    /// Status document: {run_id, subject_id, status, metrics[], best_epoch,
    /// best_val_acc, eval_accuracy, error}. Metrics hold every completed epoch.
    std::optional<nlohmann::json> run_status(const std::string& run_id) const;
    /// Blocks until the run leaves the queued and running states.
    nlohmann::json wait_run(const std::string& run_id);
    bool stop_run(const std::string& run_id);
    std::vector<std::string> run_ids() const;
    /// Called from the worker thread when a run ends.
    void on_run_finished(std::function<void(const nlohmann::json& status)> callback);

    /// Renders and stores a figure: {type: erp, erp_result_id?, spec?, zoom?}
    /// or {type: curves, run_ids?, spec?}. "latest" selects the newest source.
    Figure make_figure(const nlohmann::json& request);
    std::optional<std::filesystem::path> figure_png(const std::string& figure_id) const;
    std::optional<std::filesystem::path> figure_sidecar(const std::string& figure_id) const;

    /// Converted recordings with validation summaries.
    nlohmann::json datasets() const;

private:
    struct RunSlot;

    std::string next_id(const std::string& prefix, std::size_t& counter, const std::filesystem::path& dir);
    void worker_loop(std::stop_token stop);
    void execute_run(RunSlot& slot);
    nlohmann::json status_locked(const RunSlot& slot) const;
    TrainRun load_run(const std::string& run_id) const;

    WorkspaceConfig config_;
    mutable std::mutex mutex_;
    std::condition_variable_any work_cv_;
    std::condition_variable done_cv_;
    std::size_t analysis_counter_ = 0;
    std::size_t run_counter_ = 0;
    std::map<std::string, std::unique_ptr<RunSlot>> runs_;
    std::deque<RunSlot*> queue_;
    std::string latest_erp_;
    std::string latest_run_;
    std::function<void(const nlohmann::json&)> finished_callback_;
    std::vector<std::jthread> workers_;
};

} // namespace chatbci
