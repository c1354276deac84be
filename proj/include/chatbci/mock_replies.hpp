// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/llm_bridge.hpp>

#include <string>
#include <vector>

namespace chatbci {

/// One step of the built-in demonstration session.
struct ScriptStep {
    ResearchPhase phase;
    std::string prompt;
    /// Canned provider reply for `prompt`.
    std::string reply;
    /// Whether the human approves the proposed action (otherwise autonomy
    /// for the phase is raised to 3 before the prompt).
    bool approve;
};

/// validate → ERP → figure → train (tiny) → interpret.
const std::vector<ScriptStep>& scripted_session();

/// First `n` ideas of the canned deck in labeled-section form.
std::string canned_idea_reply(std::size_t n);

} // namespace chatbci
