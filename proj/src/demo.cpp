// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/demo.hpp>
#include <chatbci/mock_replies.hpp>
#include <chatbci/util.hpp>

#include <cstdio>

namespace chatbci {

namespace fs = std::filesystem;
using nlohmann::json;

json ScriptedSessionResult::to_json() const
{
    return {{"complete", complete},
            {"validation_pass", validation_pass},
            {"report_ids", report_ids},
            {"figure_ids", figure_ids},
            {"run_ids", run_ids},
            {"transcript_records", transcript.size()},
            {"digest", to_hex(digest)}};
}

ScriptedSessionResult run_scripted_session(Workspace& workspace, std::shared_ptr<const KnowledgeStore> knowledge,
                                           const std::optional<fs::path>& transcript_path)
{
    auto provider = MockProvider::with_defaults();
    SessionOptions opts;
    opts.session_id = "demo";
    opts.clock = sequence_clock();
    opts.knowledge = std::move(knowledge);
    opts.sleep = [](std::chrono::milliseconds) {};
    if (transcript_path) {
        if (transcript_path->has_parent_path())
            fs::create_directories(transcript_path->parent_path());
        fs::remove(*transcript_path);
        opts.transcript_path = transcript_path;
    }
    ChatSession session(provider, &workspace, opts);

    ScriptedSessionResult out;
    bool failed = false;
    auto collect = [&](const PendingAction& a) {
        if (a.state == ActionState::failed || a.state == ActionState::rejected) {
            failed = true;
            return;
        }
        if (!a.result.is_object())
            return;
        if (a.result.contains("report_id"))
            out.report_ids.push_back(a.result["report_id"]);
        if (a.result.contains("pass") && out.report_ids.size() == 1)
            out.validation_pass = a.result["pass"].get<bool>();
        if (a.result.contains("figure_id"))
            out.figure_ids.push_back(a.result["figure_id"]);
        if (a.result.contains("run_id")) {
            const auto id = a.result["run_id"].get<std::string>();
            out.run_ids.push_back(id);
            const auto status = workspace.wait_run(id);
            std::string text = "run " + id + " " + status.value("status", "");
            if (status.contains("eval_accuracy") && status["eval_accuracy"].is_number()) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.4f", status["eval_accuracy"].get<double>());
                text += ": eval accuracy " + std::string(buf);
            }
            if (status.value("status", "") != "finished")
                failed = true;
            session.notify(text);
        }
    };

    for (const auto& step : scripted_session()) {
        if (!step.approve && session.state().policy.level(step.phase) != 3)
            session.set_autonomy(step.phase, 3);
        if (session.state().phase != step.phase)
            session.set_phase(step.phase);
        const auto posted = session.post_message(step.prompt);
        for (const auto& a : posted.actions)
            collect(a.state == ActionState::pending && step.approve ? session.approve(a.action_id) : a);
    }

    out.transcript = session.transcript().records();
    out.complete = !failed && out.validation_pass && out.report_ids.size() == 2 && out.figure_ids.size() == 1 &&
                   out.run_ids.size() == 1;

    std::uint64_t h = fnv1a("");
    for (const auto& rec : out.transcript)
        h = fnv1a(rec.dump() + "\n", h);
    const auto root = workspace.config().out_root;
    std::vector<fs::path> files;
    for (const auto& id : out.report_ids)
        files.push_back(root / "analyses" / (id + ".json"));
    for (const auto& id : out.figure_ids) {
        files.push_back(root / "figures" / (id + ".png"));
        files.push_back(root / "figures" / (id + ".data.json"));
    }
    for (const auto& id : out.run_ids)
        for (const char* f : {"config.json", "metrics.jsonl", "best.ckpt", "confusion.json"})
            files.push_back(root / "runs" / id / f);
    for (const auto& f : files) {
        std::error_code ec;
        if (!fs::is_regular_file(f, ec)) {
            out.complete = false;
            continue;
        }
        h = fnv1a(f.filename().string(), h);
        h = fnv1a(read_file(f), h);
    }
    out.digest = h;
    return out;
}

} // namespace chatbci
