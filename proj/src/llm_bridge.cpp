// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <thread>

namespace chatbci {

using nlohmann::json;

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<const char*, N>& names, const char* what)
{
    for (std::size_t i = 0; i < N; ++i)
        if (s == names[i])
            return static_cast<E>(i);
    throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

constexpr std::array<const char*, 3> kRoles{"human", "assistant", "system"};
constexpr std::array<const char*, kPhaseCount> kPhases{"idea_generation", "experiment_design", "code_generation",
                                                       "execution",       "visualization",     "interpretation"};
constexpr std::array<const char*, 5> kKinds{"analysis", "code", "test_generation", "training_run", "figure"};
constexpr std::array<const char*, 6> kStates{"pending",  "approved",           "rejected",
                                             "executed", "flagged_for_review", "failed"};

std::string iso_utc(std::int64_t epoch_s, int millis)
{
    const std::time_t t = static_cast<std::time_t>(epoch_s);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, millis);
    return out;
}

} // namespace

std::string to_string(Role role) { return kRoles[static_cast<std::size_t>(role)]; }
Role parse_role(const std::string& s) { return parse_enum<Role>(s, kRoles, "role"); }
std::string to_string(ResearchPhase phase) { return kPhases[static_cast<std::size_t>(phase)]; }
ResearchPhase parse_phase(const std::string& s) { return parse_enum<ResearchPhase>(s, kPhases, "research phase"); }
std::string to_string(ActionKind kind) { return kKinds[static_cast<std::size_t>(kind)]; }
ActionKind parse_action_kind(const std::string& s) { return parse_enum<ActionKind>(s, kKinds, "action kind"); }
std::string to_string(ActionState state) { return kStates[static_cast<std::size_t>(state)]; }
ActionState parse_action_state(const std::string& s) { return parse_enum<ActionState>(s, kStates, "action state"); }

const std::array<ResearchPhase, kPhaseCount>& all_phases()
{
    static const std::array<ResearchPhase, kPhaseCount> phases{
        ResearchPhase::idea_generation, ResearchPhase::experiment_design, ResearchPhase::code_generation,
        ResearchPhase::execution,       ResearchPhase::visualization,     ResearchPhase::interpretation};
    return phases;
}

ResearchPhase default_phase(ActionKind kind)
{
    switch (kind) {
    case ActionKind::code:
    case ActionKind::test_generation: return ResearchPhase::code_generation;
    case ActionKind::figure: return ResearchPhase::visualization;
    case ActionKind::analysis:
    case ActionKind::training_run: return ResearchPhase::execution;
    }
    return ResearchPhase::execution;
}

json ChatMessage::to_json() const
{
    return {{"ts", timestamp}, {"role", to_string(role)}, {"content", content}, {"phase", to_string(phase)}};
}

ChatMessage ChatMessage::from_json(const json& j)
{
    ChatMessage m;
    m.role = parse_role(j.at("role").get<std::string>());
    m.content = j.at("content").get<std::string>();
    m.timestamp = j.value("ts", "");
    m.phase = parse_phase(j.at("phase").get<std::string>());
    return m;
}

void AutonomyPolicy::set(ResearchPhase phase, int level)
{
    if (level < 0 || level > 3)
        throw ConfigError("autonomy level must be 0..3, got " + std::to_string(level));
    levels_[static_cast<std::size_t>(phase)] = level;
}

json AutonomyPolicy::to_json() const
{
    json j = json::object();
    for (const auto p : all_phases())
        j[to_string(p)] = level(p);
    return j;
}

void AutonomyPolicy::merge(const json& j)
{
    if (!j.is_object())
        throw ConfigError("autonomy policy must be an object of phase → level");
    auto next = *this;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number_integer())
            throw ConfigError("autonomy level for '" + key + "' must be an integer");
        next.set(parse_phase(key), value.get<int>());
    }
    *this = next;
}

void PendingAction::approve()
{
    if (state != ActionState::pending)
        throw StateError("action " + action_id + " is " + to_string(state) + ", not pending");
    state = ActionState::approved;
}

void PendingAction::reject(const std::string& reason)
{
    if (state != ActionState::pending)
        throw StateError("action " + action_id + " is " + to_string(state) + ", not pending");
    state = ActionState::rejected;
    note = reason;
}

void PendingAction::mark_executed(json result_ref)
{
    if (state != ActionState::pending && state != ActionState::approved)
        throw StateError("action " + action_id + " cannot execute from " + to_string(state));
    state = ActionState::executed;
    result = std::move(result_ref);
}

void PendingAction::mark_failed(const std::string& error_text)
{
    if (state != ActionState::pending && state != ActionState::approved)
        throw StateError("action " + action_id + " cannot fail from " + to_string(state));
    state = ActionState::failed;
    error = error_text;
}

void PendingAction::flag_for_review()
{
    if (state != ActionState::executed)
        throw StateError("only executed actions can be flagged; " + action_id + " is " + to_string(state));
    state = ActionState::flagged_for_review;
}

json PendingAction::to_json() const
{
    json j{{"action_id", action_id}, {"kind", to_string(kind)}, {"payload", payload},
           {"state", to_string(state)}, {"phase", to_string(phase)}};
    if (!note.empty())
        j["note"] = note;
    if (!result.is_null())
        j["result"] = result;
    if (!error.empty())
        j["error"] = error;
    return j;
}

PendingAction PendingAction::from_json(const json& j)
{
    PendingAction a;
    a.action_id = j.at("action_id").get<std::string>();
    a.kind = parse_action_kind(j.at("kind").get<std::string>());
    a.payload = j.value("payload", json::object());
    a.state = parse_action_state(j.at("state").get<std::string>());
    a.phase = parse_phase(j.at("phase").get<std::string>());
    a.note = j.value("note", "");
    a.result = j.contains("result") ? j["result"] : json();
    a.error = j.value("error", "");
    return a;
}

Disposition gate(const PendingAction& action, const AutonomyPolicy& policy)
{
    switch (policy.level(action.phase)) {
    case 0: return Disposition::rejected_advisory;
    case 1: return Disposition::await_approval;
    case 2: return Disposition::execute_and_flag;
    default: return Disposition::execute;
    }
}

void MockProvider::add(const std::string& prompt, const std::string& reply)
{
    table_[fnv1a(prompt)] = reply;
}

MockProvider MockProvider::from_file(const std::filesystem::path& path)
{
    MockProvider p;
    try {
        const auto j = json::parse(read_file(path));
        for (const auto& r : j.at("replies"))
            p.add(r.at("prompt").get<std::string>(), r.at("reply").get<std::string>());
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return p;
}

std::string MockProvider::complete(const std::vector<ChatMessage>& messages)
{
    ++calls_;
    last_request_ = messages;
    if (failures_ > 0) {
        --failures_;
        throw ProviderError("mock provider: injected failure");
    }
    const auto it = std::find_if(messages.rbegin(), messages.rend(),
                                 [](const ChatMessage& m) { return m.role == Role::human; });
    const std::string prompt = it == messages.rend() ? std::string() : it->content;
    const auto key = fnv1a(prompt);
    if (const auto hit = table_.find(key); hit != table_.end())
        return hit->second;
    return "[mock] no canned reply for prompt " + to_hex(key) + ".";
}

std::unique_ptr<Provider> make_provider(const json& llm)
{
    const auto kind = llm.value("provider", "mock");
    if (kind == "mock") {
        if (llm.contains("mock_replies"))
            return std::make_unique<MockProvider>(MockProvider::from_file(llm["mock_replies"].get<std::string>()));
        return std::make_unique<MockProvider>(MockProvider::with_defaults());
    }
    if (kind == "openai-compatible") {
        HttpProviderConfig c;
        c.base_url = llm.value("base_url", c.base_url);
        c.model = llm.value("model", c.model);
        c.temperature = llm.value("temperature", c.temperature);
        c.max_tokens = llm.value("max_tokens", c.max_tokens);
        c.timeout_s = llm.value("timeout_s", c.timeout_s);
        return std::make_unique<HttpProvider>(c);
    }
    throw ConfigError("llm.provider must be 'mock' or 'openai-compatible', got '" + kind + "'");
}

Clock system_clock()
{
    return [] {
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        return iso_utc(ms / 1000, static_cast<int>(ms % 1000));
    };
}

Clock sequence_clock(std::int64_t start)
{
    auto counter = std::make_shared<std::int64_t>(start);
    return [counter] { return iso_utc((*counter)++, 0); };
}

Transcript::Transcript(std::filesystem::path path) : path_(std::move(path))
{
    if (std::filesystem::exists(*path_))
        records_ = read(*path_);
    else
        write_file(*path_, "");
}

void Transcript::append(const json& record)
{
    if (path_)
        append_line(*path_, record.dump());
    records_.push_back(record);
}

std::vector<json> Transcript::read(const std::filesystem::path& path)
{
    std::vector<json> out;
    std::size_t line_no = 0;
    for (const auto& line : split(read_file(path), '\n')) {
        ++line_no;
        if (trim(line).empty())
            continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

const PendingAction& SessionState::action(const std::string& id) const
{
    const auto it = actions.find(id);
    if (it == actions.end())
        throw NotFoundError("no action '" + id + "' in session " + session_id);
    return it->second;
}

json SessionState::to_json() const
{
    json j;
    j["session_id"] = session_id;
    j["phase"] = to_string(phase);
    j["autonomy"] = policy.to_json();
    j["messages"] = json::array();
    for (const auto& m : messages)
        j["messages"].push_back(m.to_json());
    j["actions"] = json::array();
    for (const auto& id : action_order)
        j["actions"].push_back(actions.at(id).to_json());
    j["next_action"] = next_action;
    return j;
}

void SessionState::apply(const json& rec)
{
    if (rec.contains("session_id"))
        session_id = rec["session_id"].get<std::string>();
    messages.push_back(ChatMessage::from_json(rec));
    phase = messages.back().phase;
    if (rec.contains("autonomy_event"))
        policy.set(parse_phase(rec["autonomy_event"].at("phase").get<std::string>()),
                   rec["autonomy_event"].at("level").get<int>());
    if (rec.contains("action_event")) {
        auto a = PendingAction::from_json(rec["action_event"].at("action"));
        if (!actions.count(a.action_id)) {
            action_order.push_back(a.action_id);
            ++next_action;
        }
        actions[a.action_id] = std::move(a);
    }
}

std::vector<json> parse_action_lines(const std::string& reply)
{
    std::vector<json> out;
    for (const auto& line : split(reply, '\n')) {
        const auto t = trim(line);
        if (!t.starts_with("ACTION "))
            continue;
        try {
            auto j = json::parse(t.substr(7));
            if (j.is_object() && j.contains("kind"))
                out.push_back(std::move(j));
        } catch (const json::parse_error&) {
        }
    }
    return out;
}

ChatSession::ChatSession(Provider& provider, ActionExecutor* executor, SessionOptions options)
    : provider_(provider), executor_(executor), options_(std::move(options))
{
    if (!options_.clock)
        options_.clock = system_clock();
    if (!options_.sleep)
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (options_.transcript_path) {
        transcript_ = Transcript(*options_.transcript_path);
        state_ = replay(transcript_.records());
    }
    if (transcript_.size() == 0) {
        state_.session_id = options_.session_id;
        auto open = base_record(Role::system, "session " + options_.session_id + " opened");
        open["session_id"] = options_.session_id;
        record(open);
        for (const auto p : all_phases())
            if (options_.policy.level(p) != state_.policy.level(p)) {
                auto rec = base_record(Role::system, "autonomy " + to_string(p) + " = " +
                                                         std::to_string(options_.policy.level(p)));
                rec["autonomy_event"] = {{"phase", to_string(p)}, {"level", options_.policy.level(p)}};
                record(rec);
            }
    }
}

json ChatSession::base_record(Role role, const std::string& content) const
{
    return {{"ts", options_.clock()}, {"role", to_string(role)}, {"content", content},
            {"phase", to_string(state_.phase)}};
}

void ChatSession::record(json rec)
{
    transcript_.append(rec);
    state_.apply(rec);
}

ContextBundle ChatSession::context_for(const std::string& content) const
{
    if (!options_.knowledge || options_.knowledge->size() == 0)
        return {};
    std::vector<KnowledgeDoc> ranked;
    for (auto& hit : retrieve(options_.knowledge->snapshot(), content, options_.context_docs))
        ranked.push_back(std::move(hit.doc));
    return assemble_context(ranked, options_.context_budget_tokens);
}

ChatMessage ChatSession::send(const std::string& content, const std::optional<ContextBundle>& context)
{
    std::lock_guard lock(mutex_);
    if (trim(content).empty())
        throw PreconditionError("message content must be non-empty");
    const auto bundle = context ? *context : context_for(content);

    std::vector<ChatMessage> request;
    if (!bundle.excerpts.empty())
        request.push_back({Role::system, "Knowledge base context:\n\n" + bundle.render(), options_.clock(),
                           state_.phase});
    for (const auto& m : state_.messages)
        if (m.role != Role::system)
            request.push_back(m);

    auto human = base_record(Role::human, content);
    if (!bundle.excerpts.empty()) {
        human["context"] = json::array();
        for (const auto& e : bundle.excerpts)
            human["context"].push_back({{"doc_id", e.doc_id}, {"level", e.level}});
    }
    request.push_back(ChatMessage::from_json(human));

    std::string reply;
    std::string last_error;
    bool ok = false;
    for (int attempt = 0; attempt <= options_.max_retries && !ok; ++attempt) {
        if (attempt > 0)
            options_.sleep(std::chrono::milliseconds(250 << (attempt - 1)));
        try {
            reply = provider_.complete(request);
            ok = true;
        } catch (const ProviderError& e) {
            last_error = e.what();
        }
    }
    record(human);
    if (!ok) {
        auto failure = base_record(Role::system, "provider error after " +
                                                     std::to_string(options_.max_retries + 1) +
                                                     " attempts: " + last_error);
        failure["provider_error"] = true;
        record(failure);
        throw ProviderError(last_error);
    }
    if (trim(reply).empty())
        reply = "(empty reply)";
    record(base_record(Role::assistant, reply));
    return state_.messages.back();
}

void ChatSession::action_event(const PendingAction& a, const std::string& event)
{
    Role role = Role::system;
    if (event == "proposed")
        role = Role::assistant;
    else if (event == "approved" || event == "rejected")
        role = Role::human;
    auto rec = base_record(role, "action " + a.action_id + " " + event + " (" + to_string(a.kind) + ")");
    rec["action_event"] = {{"event", event}, {"action", a.to_json()}};
    record(rec);
}

void ChatSession::run_action(PendingAction& a)
{
    if (!executor_) {
        a.mark_executed(json::object());
        action_event(a, "executed");
        return;
    }
    try {
        a.mark_executed(executor_->execute(a));
        action_event(a, "executed");
    } catch (const std::exception& e) {
        a.mark_failed(e.what());
        action_event(a, "failed");
    }
}

PendingAction ChatSession::propose_locked(ActionKind kind, json payload, std::optional<ResearchPhase> phase)
{
    PendingAction a;
    a.action_id = "a" + std::to_string(state_.next_action);
    a.kind = kind;
    a.payload = payload.is_null() ? json::object() : std::move(payload);
    a.phase = phase.value_or(default_phase(kind));
    action_event(a, "proposed");
    switch (gate(a, state_.policy)) {
    case Disposition::rejected_advisory:
        a.reject("advisory only: autonomy level 0 for " + to_string(a.phase));
        action_event(a, "rejected");
        break;
    case Disposition::await_approval: break;
    case Disposition::execute_and_flag:
        run_action(a);
        if (a.state == ActionState::executed) {
            a.flag_for_review();
            action_event(a, "flagged_for_review");
        }
        break;
    case Disposition::execute: run_action(a); break;
    }
    return a;
}

PendingAction ChatSession::propose(ActionKind kind, json payload, std::optional<ResearchPhase> phase)
{
    std::lock_guard lock(mutex_);
    return propose_locked(kind, std::move(payload), phase);
}

PostResult ChatSession::post_message(const std::string& content)
{
    std::lock_guard lock(mutex_);
    PostResult out;
    out.reply = send(content);
    for (const auto& p : parse_action_lines(out.reply.content)) {
        ActionKind kind;
        std::optional<ResearchPhase> phase;
        try {
            kind = parse_action_kind(p.at("kind").get<std::string>());
            if (p.contains("phase"))
                phase = parse_phase(p["phase"].get<std::string>());
        } catch (const std::exception& e) {
            notify(std::string("ignored malformed action proposal: ") + e.what());
            continue;
        }
        out.actions.push_back(propose_locked(kind, p.value("payload", json::object()), phase));
    }
    return out;
}

PendingAction ChatSession::approve(const std::string& action_id)
{
    std::lock_guard lock(mutex_);
    auto a = state_.action(action_id);
    a.approve();
    action_event(a, "approved");
    run_action(a);
    return a;
}

PendingAction ChatSession::reject(const std::string& action_id, const std::string& reason)
{
    std::lock_guard lock(mutex_);
    auto a = state_.action(action_id);
    a.reject(reason);
    action_event(a, "rejected");
    return a;
}

void ChatSession::set_autonomy(ResearchPhase phase, int level)
{
    std::lock_guard lock(mutex_);
    AutonomyPolicy check;
    check.set(phase, level);
    auto rec = base_record(Role::human, "autonomy " + to_string(phase) + " = " + std::to_string(level));
    rec["autonomy_event"] = {{"phase", to_string(phase)}, {"level", level}};
    record(rec);
}

void ChatSession::set_phase(ResearchPhase phase)
{
    std::lock_guard lock(mutex_);
    auto rec = base_record(Role::human, "phase " + to_string(phase));
    rec["phase"] = to_string(phase);
    record(rec);
}

void ChatSession::notify(const std::string& content)
{
    std::lock_guard lock(mutex_);
    record(base_record(Role::system, content));
}

SessionState ChatSession::state() const
{
    std::lock_guard lock(mutex_);
    return state_;
}

SessionState ChatSession::replay(const std::vector<json>& records)
{
    SessionState s;
    for (const auto& r : records)
        s.apply(r);
    return s;
}

} // namespace chatbci
