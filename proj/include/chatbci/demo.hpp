// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/llm_bridge.hpp>
#include <chatbci/workspace.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

struct ScriptedSessionResult {
    std::vector<nlohmann::json> transcript;
    std::vector<std::string> report_ids;
    std::vector<std::string> figure_ids;
    std::vector<std::string> run_ids;
    /// Validation outcome of the first step.
    bool validation_pass = false;
    /// Every step produced its artifact and no action failed.
    bool complete = false;
    /// FNV-1a over the transcript and every artifact file, in a fixed order.
    std::uint64_t digest = 0;

    nlohmann::json to_json() const;
};

/// Plays the built-in mock session (validate → ERP → figure → tiny training
/// → interpretation) against `workspace` with a deterministic clock.
/// Approving steps approve their pending action; the others raise the
/// phase's autonomy to 3 first. Training runs are awaited before the next
/// step. The transcript is written to `transcript_path` when given.
ScriptedSessionResult run_scripted_session(Workspace& workspace, std::shared_ptr<const KnowledgeStore> knowledge,
                                           const std::optional<std::filesystem::path>& transcript_path = std::nullopt);

} // namespace chatbci
