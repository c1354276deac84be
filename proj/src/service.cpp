// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/data_store.hpp>
#include <chatbci/error.hpp>
#include <chatbci/service.hpp>
#include <chatbci/util.hpp>

#include <charconv>
#include <regex>
#include <set>
#include <thread>

#include <httplib.h>

namespace chatbci {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p)
{
    return p.empty() || p.is_absolute() ? p : base / p;
}

HttpResponse json_response(int status, const json& body)
{
    return {status, "application/json", body.dump()};
}

HttpResponse error_response(int status, const std::string& kind, const std::string& message)
{
    json err{{"kind", kind}, {"message", message}};
    // Messages of the form "field: detail" become field-level entries.
    static const std::regex field_re(R"(^([A-Za-z_][A-Za-z0-9_.]*): (.+)$)");
    std::smatch m;
    if (std::regex_match(message, m, field_re))
        err["fields"] = {{m[1].str(), m[2].str()}};
    return json_response(status, {{"error", err}});
}

int status_for(const Error& e)
{
    const auto& k = e.kind();
    if (k == "NotFoundError" || k == "IOError")
        return 404;
    if (k == "StateError")
        return 409;
    if (k == "ProviderError")
        return 502;
    return 400;
}

std::vector<std::string> segments(const std::string& path)
{
    auto parts = split(path.substr(0, path.find('?')), '/');
    std::erase_if(parts, [](const std::string& s) { return s.empty(); });
    return parts;
}

json parse_body(const std::string& body)
{
    if (trim(body).empty())
        return json::object();
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("body: malformed JSON (") + e.what() + ")");
    }
}

std::size_t highest_session(const fs::path& dir)
{
    std::size_t best = 0;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec)) {
        const auto stem = e.path().stem().string();
        std::size_t n = 0;
        if (stem.size() > 1 && stem[0] == 's') {
            const auto [ptr, err] = std::from_chars(stem.data() + 1, stem.data() + stem.size(), n);
            if (err == std::errc() && ptr == stem.data() + stem.size())
                best = std::max(best, n);
        }
    }
    return best;
}

json run_refs(const std::vector<PendingAction>& actions)
{
    json refs = json::array();
    for (const auto& a : actions)
        if (a.state == ActionState::executed || a.state == ActionState::flagged_for_review) {
            json ref{{"action_id", a.action_id}};
            if (a.result.is_object())
                ref.update(a.result);
            refs.push_back(std::move(ref));
        }
    return refs;
}

} // namespace

ServiceConfig ServiceConfig::from_json(const json& j, const fs::path& base_dir)
{
    ServiceConfig c;
    try {
        if (!j.is_object())
            throw ConfigError("config: expected an object");
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            c.data_root = p.value("data_root", c.data_root.string());
            c.out_root = p.value("out_root", c.out_root.string());
            c.kb_dir = p.value("kb_dir", std::string());
        }
        c.data_root = resolve(base_dir, c.data_root);
        c.out_root = resolve(base_dir, c.out_root);
        c.kb_dir = resolve(base_dir, c.kb_dir);
        if (j.contains("llm")) {
            c.llm = j["llm"];
            if (c.llm.contains("mock_replies"))
                c.llm["mock_replies"] = resolve(base_dir, c.llm["mock_replies"].get<std::string>()).string();
        }
        if (j.contains("autonomy"))
            c.autonomy.merge(j["autonomy"]);
        c.context_budget_tokens = j.value("context_budget_tokens", c.context_budget_tokens);
        c.max_parallel_runs = j.value("max_parallel_runs", c.max_parallel_runs);
        c.deterministic_clock = j.value("deterministic_clock", c.deterministic_clock);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (c.max_parallel_runs == 0)
        throw ConfigError("max_parallel_runs: must be at least 1");
    return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path)
{
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON");
    }
    return from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

json ServiceConfig::to_json() const
{
    return {{"paths", {{"data_root", data_root.string()}, {"out_root", out_root.string()}, {"kb_dir", kb_dir.string()}}},
            {"llm", llm},
            {"autonomy", autonomy.to_json()},
            {"context_budget_tokens", context_budget_tokens},
            {"max_parallel_runs", max_parallel_runs},
            {"deterministic_clock", deterministic_clock}};
}

struct Service::SessionEntry {
    std::unique_ptr<Provider> provider;
    std::unique_ptr<ChatSession> chat;
    std::mutex mutex;
};

struct Service::Server {
    httplib::Server http;
    std::thread thread;
};

Service::Service(ServiceConfig config) : config_(std::move(config))
{
    make_provider(config_.llm);  // reject a bad provider section up front
    if (!config_.kb_dir.empty())
        knowledge_ = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(config_.kb_dir));
    fs::create_directories(config_.out_root / "sessions");
    session_counter_ = highest_session(config_.out_root / "sessions");
    workspace_ = std::make_unique<Workspace>(WorkspaceConfig{config_.data_root, config_.out_root, config_.max_parallel_runs});
    workspace_->on_run_finished([this](const json& status) {
        const auto run_id = status.value("run_id", "");
        std::string owner;
        {
            std::lock_guard lock(sessions_mutex_);
            const auto it = run_owner_.find(run_id);
            if (it == run_owner_.end()) {
                run_owner_[run_id] = "";  // finished before its session claimed it
                return;
            }
            owner = it->second;
        }
        if (owner.empty())
            return;
        std::string text = "run " + run_id + " " + status.value("status", "");
        if (status.contains("eval_accuracy") && status["eval_accuracy"].is_number())
            text += ": eval accuracy " + std::to_string(status["eval_accuracy"].get<double>());
        try {
            session(owner).chat->notify(text);
        } catch (const std::exception&) {
        }
    });
}

Service::~Service()
{
    stop();
    workspace_.reset();
}

HttpResponse Service::create_session(const json& body)
{
    if (!body.is_object())
        throw ConfigError("body: expected a JSON object");
    auto policy = config_.autonomy;
    if (body.contains("autonomy"))
        policy.merge(body["autonomy"]);
    std::string id;
    {
        std::lock_guard lock(sessions_mutex_);
        id = "s" + std::to_string(++session_counter_);
    }
    auto entry = std::make_unique<SessionEntry>();
    entry->provider = make_provider(config_.llm);
    SessionOptions opts;
    opts.session_id = id;
    opts.transcript_path = config_.out_root / "sessions" / (id + ".jsonl");
    opts.clock = config_.deterministic_clock ? sequence_clock() : system_clock();
    opts.knowledge = knowledge_;
    opts.context_budget_tokens = config_.context_budget_tokens;
    opts.policy = policy;
    entry->chat = std::make_unique<ChatSession>(*entry->provider, workspace_.get(), opts);
    std::lock_guard lock(sessions_mutex_);
    sessions_[id] = std::move(entry);
    return json_response(201, {{"session_id", id}, {"autonomy", policy.to_json()}});
}

Service::SessionEntry& Service::session(const std::string& id)
{
    std::lock_guard lock(sessions_mutex_);
    if (const auto it = sessions_.find(id); it != sessions_.end())
        return *it->second;
    // Sessions survive restarts through their transcripts.
    const auto path = config_.out_root / "sessions" / (id + ".jsonl");
    std::error_code ec;
    if (id.empty() || id.find('/') != std::string::npos || id[0] == '.' || !fs::is_regular_file(path, ec))
        throw NotFoundError("session '" + id + "' not found");
    auto entry = std::make_unique<SessionEntry>();
    entry->provider = make_provider(config_.llm);
    SessionOptions opts;
    opts.session_id = id;
    opts.transcript_path = path;
    opts.clock = config_.deterministic_clock ? sequence_clock() : system_clock();
    opts.knowledge = knowledge_;
    opts.context_budget_tokens = config_.context_budget_tokens;
    entry->chat = std::make_unique<ChatSession>(*entry->provider, workspace_.get(), opts);
    auto& ref = *entry;
    sessions_[id] = std::move(entry);
    return ref;
}

HttpResponse Service::handle(const HttpRequest& request)
{
    if (request.method == "GET" || request.idempotency_key.empty())
        return route(request);
    const auto key = request.method + " " + request.path + " " + request.idempotency_key;
    std::promise<HttpResponse> promise;
    std::shared_future<HttpResponse> future;
    {
        std::lock_guard lock(idempotency_mutex_);
        if (const auto it = idempotency_.find(key); it != idempotency_.end())
            future = it->second;
        else
            idempotency_[key] = promise.get_future().share();
    }
    if (future.valid())
        return future.get();  // replay: at most one execution per key
    auto response = route(request);
    promise.set_value(response);
    return response;
}

HttpResponse Service::route(const HttpRequest& req)
{
    const auto seg = segments(req.path);
    const auto& m = req.method;
    auto is = [&](std::initializer_list<const char*> pattern) {
        if (seg.size() != pattern.size())
            return false;
        std::size_t i = 0;
        for (const char* p : pattern) {
            if (std::string_view(p) != "*" && seg[i] != p)
                return false;
            ++i;
        }
        return true;
    };
    try {
        if (seg.empty() || seg[0] != "api")
            return error_response(404, "NotFoundError", "no route for " + req.path);

        if (m == "GET" && is({"api", "health"}))
            return json_response(200, {{"ok", true}});

        if (m == "POST" && is({"api", "sessions"}))
            return create_session(parse_body(req.body));
        if (m == "GET" && is({"api", "sessions"})) {
            std::lock_guard lock(sessions_mutex_);
            json ids = json::array();
            for (const auto& [id, s] : sessions_)
                ids.push_back(id);
            return json_response(200, {{"sessions", ids}});
        }
        if (m == "GET" && is({"api", "sessions", "*"}))
            return json_response(200, session(seg[2]).chat->state().to_json());
        if (m == "GET" && is({"api", "sessions", "*", "transcript"}))
            return json_response(200, session(seg[2]).chat->transcript().records());

        if (m == "POST" && is({"api", "sessions", "*", "messages"})) {
            auto& s = session(seg[2]);
            const auto body = parse_body(req.body);
            if (!body.is_object() || !body.contains("content") || !body["content"].is_string())
                throw ConfigError("content: required string");
            std::optional<ResearchPhase> phase;
            if (body.contains("phase")) {
                if (!body["phase"].is_string())
                    throw ConfigError("phase: expected a string");
                try {
                    phase = parse_phase(body["phase"].get<std::string>());
                } catch (const Error& e) {
                    throw ConfigError(std::string("phase: ") + e.what());
                }
            }
            std::lock_guard lock(s.mutex);
            if (phase && s.chat->state().phase != *phase)
                s.chat->set_phase(*phase);
            const auto result = s.chat->post_message(body["content"].get<std::string>());
            json reply = result.reply.to_json();
            reply["artifacts"] = run_refs(result.actions);
            json pending = json::array(), actions = json::array();
            for (const auto& a : result.actions) {
                actions.push_back(a.to_json());
                if (a.state == ActionState::pending)
                    pending.push_back(a.to_json());
                if (a.result.is_object() && a.result.contains("run_id")) {
                    std::lock_guard olock(sessions_mutex_);
                    const auto id = a.result["run_id"].get<std::string>();
                    const bool finished = run_owner_.contains(id);
                    run_owner_[id] = seg[2];
                    if (finished)
                        s.chat->notify("run " + id + " " + workspace_->run_status(id)->value("status", ""));
                }
            }
            return json_response(200, {{"reply", reply}, {"pending_actions", pending}, {"actions", actions}});
        }

        if (is({"api", "sessions", "*", "autonomy"})) {
            auto& s = session(seg[2]);
            if (m == "GET")
                return json_response(200, s.chat->state().policy.to_json());
            if (m == "PUT") {
                const auto body = parse_body(req.body);
                std::lock_guard lock(s.mutex);
                auto next = s.chat->state().policy;
                try {
                    next.merge(body);
                } catch (const Error& e) {
                    const std::string msg = e.what();
                    throw ConfigError(msg.find(": ") != std::string::npos ? msg : "autonomy: " + msg);
                }
                const auto current = s.chat->state().policy;
                for (const auto p : all_phases())
                    if (next.level(p) != current.level(p))
                        s.chat->set_autonomy(p, next.level(p));
                return json_response(200, s.chat->state().policy.to_json());
            }
        }

        if (m == "POST" && seg.size() == 6 && is({"api", "sessions", "*", "actions", "*", "*"})) {
            auto& s = session(seg[2]);
            std::lock_guard lock(s.mutex);
            if (seg[5] == "approve") {
                const auto a = s.chat->approve(seg[4]);
                if (a.result.is_object() && a.result.contains("run_id")) {
                    std::lock_guard olock(sessions_mutex_);
                    run_owner_.try_emplace(a.result["run_id"].get<std::string>(), seg[2]);
                }
                return json_response(200, a.to_json());
            }
            if (seg[5] == "reject") {
                const auto body = parse_body(req.body);
                return json_response(200, s.chat->reject(seg[4], body.value("reason", std::string())).to_json());
            }
        }

        if (m == "GET" && is({"api", "datasets"}))
            return json_response(200, workspace_->datasets());

        if (m == "POST" && is({"api", "analyses"})) {
            const auto body = parse_body(req.body);
            if (!body.is_object() || !body.contains("kind") || !body["kind"].is_string())
                throw ConfigError("kind: required, one of erp, psd, stats, validate");
            auto request = body.value("params", json::object());
            if (!request.is_object())
                throw ConfigError("params: expected an object");
            request["kind"] = body["kind"];
            request.erase("op");
            const auto doc = workspace_->analyze(request);
            return json_response(202, {{"report_id", doc.at("report_id")}, {"status", doc.at("status")}});
        }
        if (m == "GET" && is({"api", "analyses", "*"})) {
            const auto doc = workspace_->report(seg[2]);
            if (!doc)
                throw NotFoundError("report '" + seg[2] + "' not found");
            return json_response(200, *doc);
        }

        if (m == "POST" && is({"api", "runs"})) {
            const auto request = parse_run_request(parse_body(req.body));
            return json_response(202, {{"run_id", workspace_->start_run(request)}});
        }
        if (m == "GET" && is({"api", "runs"}))
            return json_response(200, {{"runs", workspace_->run_ids()}});
        if (m == "GET" && is({"api", "runs", "*"})) {
            const auto status = workspace_->run_status(seg[2]);
            if (!status)
                throw NotFoundError("run '" + seg[2] + "' not found");
            return json_response(200, *status);
        }
        if (m == "POST" && is({"api", "runs", "*", "stop"})) {
            if (!workspace_->stop_run(seg[2]))
                throw NotFoundError("run '" + seg[2] + "' is not active");
            return json_response(202, {{"run_id", seg[2]}, {"stopping", true}});
        }

        if (m == "POST" && is({"api", "figures"})) {
            const auto fig = workspace_->make_figure(parse_body(req.body));
            return json_response(201, {{"figure_id", fig.figure_id}});
        }
        if (m == "GET" && is({"api", "figures", "*"})) {
            const auto p = workspace_->figure_png(seg[2]);
            if (!p)
                throw NotFoundError("figure '" + seg[2] + "' not found");
            return {200, "image/png", read_file(*p)};
        }
        if (m == "GET" && is({"api", "figures", "*", "data"})) {
            const auto p = workspace_->figure_sidecar(seg[2]);
            if (!p)
                throw NotFoundError("figure '" + seg[2] + "' not found");
            return {200, "application/json", read_file(*p)};
        }
        return error_response(404, "NotFoundError", "no route for " + m + " " + req.path);
    } catch (const Error& e) {
        return error_response(status_for(e), e.kind(), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "FormatError", std::string("body: ") + e.what());
    } catch (const std::exception& e) {
        return error_response(500, "InternalError", e.what());
    }
}

namespace {

void bind_routes(httplib::Server& http, Service& service)
{
    auto forward = [&service](const httplib::Request& in, httplib::Response& out) {
        HttpRequest req{in.method, in.path, in.body, in.get_header_value("Idempotency-Key")};
        const auto res = service.handle(req);
        out.status = res.status;
        out.set_content(res.body, res.content_type);
    };
    http.Get(".*", forward);
    http.Post(".*", forward);
    http.Put(".*", forward);
    http.Delete(".*", forward);
}

} // namespace

bool Service::serve(const std::string& host, int port)
{
    server_ = std::make_unique<Server>();
    bind_routes(server_->http, *this);
    return server_->http.listen(host, port);
}

int Service::serve_background(const std::string& host)
{
    server_ = std::make_unique<Server>();
    bind_routes(server_->http, *this);
    const int port = server_->http.bind_to_any_port(host);
    if (port <= 0)
        throw IOError("cannot bind an HTTP port on " + host);
    server_->thread = std::thread([this] { server_->http.listen_after_bind(); });
    server_->http.wait_until_ready();
    return port;
}

void Service::stop()
{
    if (!server_)
        return;
    server_->http.stop();
    if (server_->thread.joinable())
        server_->thread.join();
    server_.reset();
}

} // namespace chatbci
