// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/knowledge_base.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/workspace.hpp>

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace chatbci {

/// Contents of chatbci.json. Relative paths resolve against the file.
struct ServiceConfig {
    std::filesystem::path data_root = "data";
    std::filesystem::path out_root = "out";
    /// Knowledge documents; none when empty.
    std::filesystem::path kb_dir;
    /// {"provider": "mock" | "openai-compatible", ...}.
    nlohmann::json llm = {{"provider", "mock"}};
    AutonomyPolicy autonomy;
    std::size_t context_budget_tokens = 1500;
    std::size_t max_parallel_runs = 1;
    /// Sequence-clock timestamps for reproducible transcripts.
    bool deterministic_clock = false;

    static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
    static ServiceConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
    std::string idempotency_key;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// The REST surface. handle() is transport-free so tests can drive it
/// directly; serve() binds it to an HTTP listener.
class Service
{
public:
    explicit Service(ServiceConfig config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse handle(const HttpRequest& request);

    /// Blocks serving HTTP until stop(). Returns false if binding fails.
    bool serve(const std::string& host, int port);
    /// Binds to an ephemeral port and serves on a background thread.
    int serve_background(const std::string& host = "127.0.0.1");
    void stop();

    Workspace& workspace() { return *workspace_; }
    const ServiceConfig& config() const { return config_; }

private:
    struct SessionEntry;
    struct Server;

    HttpResponse route(const HttpRequest& request);
    HttpResponse create_session(const nlohmann::json& body);
    SessionEntry& session(const std::string& id);

    ServiceConfig config_;
    std::shared_ptr<const KnowledgeStore> knowledge_;
    std::unique_ptr<Workspace> workspace_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<SessionEntry>> sessions_;
    std::map<std::string, std::string> run_owner_;
    std::size_t session_counter_ = 0;
    std::mutex idempotency_mutex_;
    std::map<std::string, std::shared_future<HttpResponse>> idempotency_;
    std::unique_ptr<Server> server_;
};

} // namespace chatbci
