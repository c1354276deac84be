// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/knowledge_base.hpp>

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

enum class Role { human, assistant, system };
std::string to_string(Role role);
Role parse_role(const std::string& s);

enum class ResearchPhase {
    idea_generation,
    experiment_design,
    code_generation,
    execution,
    visualization,
    interpretation,
};
inline constexpr std::size_t kPhaseCount = 6;
std::string to_string(ResearchPhase phase);
/// Throws ConfigError for unknown names.
ResearchPhase parse_phase(const std::string& s);
const std::array<ResearchPhase, kPhaseCount>& all_phases();

struct ChatMessage {
    Role role = Role::human;
    std::string content;
    std::string timestamp;
    ResearchPhase phase = ResearchPhase::idea_generation;

    nlohmann::json to_json() const;
    static ChatMessage from_json(const nlohmann::json& j);
};

/// Autonomy levels: 0 manual, 1 propose, 2 auto with review, 3 auto.
class AutonomyPolicy
{
public:
    AutonomyPolicy() { levels_.fill(1); }
    int level(ResearchPhase phase) const { return levels_[static_cast<std::size_t>(phase)]; }
    /// Throws ConfigError outside 0..3.
    void set(ResearchPhase phase, int level);
    nlohmann::json to_json() const;
    /// Applies the given phase → level entries on top of this policy.
    void merge(const nlohmann::json& j);

    bool operator==(const AutonomyPolicy&) const = default;

private:
    std::array<int, kPhaseCount> levels_{};
};

enum class ActionKind { analysis, code, test_generation, training_run, figure };
std::string to_string(ActionKind kind);
ActionKind parse_action_kind(const std::string& s);
/// Phase an action belongs to when the proposal does not name one.
ResearchPhase default_phase(ActionKind kind);

enum class ActionState { pending, approved, rejected, executed, flagged_for_review, failed };
std::string to_string(ActionState state);
ActionState parse_action_state(const std::string& s);

/// An AI-proposed action moving through the approval state machine:
/// pending → approved → executed | failed, pending → rejected, and
/// pending → executed (auto levels), executed → flagged_for_review.
struct PendingAction {
    std::string action_id;
    ActionKind kind = ActionKind::analysis;
    nlohmann::json payload = nlohmann::json::object();
    ActionState state = ActionState::pending;
    ResearchPhase phase = ResearchPhase::execution;
    std::string note;
    nlohmann::json result;
    std::string error;

    /// Each throws StateError on an illegal transition.
    void approve();
    void reject(const std::string& reason);
    void mark_executed(nlohmann::json result_ref);
    void mark_failed(const std::string& error_text);
    void flag_for_review();

    nlohmann::json to_json() const;
    static PendingAction from_json(const nlohmann::json& j);
};

enum class Disposition { rejected_advisory, await_approval, execute_and_flag, execute };
Disposition gate(const PendingAction& action, const AutonomyPolicy& policy);

/// Messages-in, text-out provider abstraction.
class Provider
{
public:
    virtual ~Provider() = default;
    /// Throws ProviderError on failure.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic provider: replies are looked up by the FNV-1a hash of the
/// last human message. Unknown prompts get a fixed fallback naming the hash.
class MockProvider : public Provider
{
public:
    MockProvider() = default;
    /// Canned table bundled with the library (used by the scripted session).
    static MockProvider with_defaults();
    /// Reads {"replies": [{"prompt": ..., "reply": ...}]}.
    static MockProvider from_file(const std::filesystem::path& path);

    void add(const std::string& prompt, const std::string& reply);
    /// The next `n` calls throw ProviderError (for retry tests).
    void fail_next(int n) { failures_ = n; }
    std::size_t calls() const { return calls_; }
    /// Last message list seen, including any system context.
    const std::vector<ChatMessage>& last_request() const { return last_request_; }

    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string name() const override { return "mock"; }

private:
    std::map<std::uint64_t, std::string> table_;
    int failures_ = 0;
    std::size_t calls_ = 0;
    std::vector<ChatMessage> last_request_;
};

struct HttpProviderConfig {
    std::string base_url = "https://api.openai.com";
    std::string model = "gpt-4o";
    double temperature = 0.2;
    int max_tokens = 2048;
    int timeout_s = 120;
    /// Read from CHATBCI_LLM_API_KEY when empty.
    std::string api_key;
};

/// OpenAI-compatible /v1/chat/completions client.
class HttpProvider : public Provider
{
public:
    explicit HttpProvider(HttpProviderConfig config);
    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string name() const override { return "openai-compatible"; }

private:
    HttpProviderConfig config_;
};

/// Builds a provider from the "llm" config section: provider ∈ {mock,
/// openai-compatible} plus pass-through model settings.
std::unique_ptr<Provider> make_provider(const nlohmann::json& llm_config);

using Clock = std::function<std::string()>;
/// Wall-clock UTC timestamps (ISO 8601, milliseconds).
Clock system_clock();
/// Deterministic timestamps: `start` plus one second per call.
Clock sequence_clock(std::int64_t start_epoch_s = 1767225600);

/// Append-only JSONL record file.
class Transcript
{
public:
    Transcript() = default;
    explicit Transcript(std::filesystem::path path);

    void append(const nlohmann::json& record);
    const std::vector<nlohmann::json>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const std::optional<std::filesystem::path>& path() const { return path_; }

    static std::vector<nlohmann::json> read(const std::filesystem::path& path);

private:
    std::optional<std::filesystem::path> path_;
    std::vector<nlohmann::json> records_;
};

/// Everything a transcript determines about a session.
struct SessionState {
    std::string session_id;
    ResearchPhase phase = ResearchPhase::idea_generation;
    AutonomyPolicy policy;
    std::vector<ChatMessage> messages;
    std::map<std::string, PendingAction> actions;
    std::vector<std::string> action_order;
    std::size_t next_action = 1;

    const PendingAction& action(const std::string& id) const;
    nlohmann::json to_json() const;
    /// Folds one transcript record into the state.
    void apply(const nlohmann::json& record);
};

/// Dispatches executed actions to the workspace; returns a result reference
/// such as {"run_id": ...}. Throws on failure.
class ActionExecutor
{
public:
    virtual ~ActionExecutor() = default;
    virtual nlohmann::json execute(const PendingAction& action) = 0;
};

struct SessionOptions {
    std::string session_id = "s1";
    std::optional<std::filesystem::path> transcript_path;
    Clock clock = system_clock();
    /// Store queried for context on every send; none when null.
    std::shared_ptr<const KnowledgeStore> knowledge;
    std::size_t context_budget_tokens = 1500;
    std::size_t context_docs = 4;
    int max_retries = 2;
    std::function<void(std::chrono::milliseconds)> sleep;
    AutonomyPolicy policy;
};

struct PostResult {
    ChatMessage reply;
    std::vector<PendingAction> actions;
};

/// A chat session: provider calls, transcript, and the action gate. All
/// public methods are serialized by an internal mutex.
class ChatSession
{
public:
    ChatSession(Provider& provider, ActionExecutor* executor, SessionOptions options);

    /// Sends one human message with retrieved context; appends the human and
    /// assistant records (or the human record and a failure record).
    ChatMessage send(const std::string& content, const std::optional<ContextBundle>& context = std::nullopt);

    /// send() plus parsing of `ACTION {json}` lines in the reply; each
    /// proposal is gated and, when allowed, executed.
    PostResult post_message(const std::string& content);

    /// Proposes an action directly (bypassing the provider).
    PendingAction propose(ActionKind kind, nlohmann::json payload, std::optional<ResearchPhase> phase = std::nullopt);

    PendingAction approve(const std::string& action_id);
    PendingAction reject(const std::string& action_id, const std::string& reason);
    void set_autonomy(ResearchPhase phase, int level);
    void set_phase(ResearchPhase phase);
    /// Appends a system notice (e.g. completion of an asynchronous run).
    void notify(const std::string& content);

    SessionState state() const;
    const Transcript& transcript() const { return transcript_; }

    /// Rebuilds session state from transcript records.
    static SessionState replay(const std::vector<nlohmann::json>& records);

private:
    void record(nlohmann::json rec);
    nlohmann::json base_record(Role role, const std::string& content) const;
    PendingAction propose_locked(ActionKind kind, nlohmann::json payload, std::optional<ResearchPhase> phase);
    void action_event(const PendingAction& a, const std::string& event);
    void run_action(PendingAction& a);
    ContextBundle context_for(const std::string& content) const;

    Provider& provider_;
    ActionExecutor* executor_;
    SessionOptions options_;
    Transcript transcript_;
    SessionState state_;
    mutable std::recursive_mutex mutex_;
};

/// Extracts `ACTION {json}` proposals from an assistant reply.
std::vector<nlohmann::json> parse_action_lines(const std::string& reply);

} // namespace chatbci
