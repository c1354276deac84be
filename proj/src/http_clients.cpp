// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/ideation.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/util.hpp>

#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace chatbci {

using nlohmann::json;

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config))
{
    if (config_.api_key.empty())
        if (const char* key = std::getenv("CHATBCI_LLM_API_KEY"))
            config_.api_key = key;
}

std::string HttpProvider::complete(const std::vector<ChatMessage>& messages)
{
    if (config_.api_key.empty())
        throw ProviderError("CHATBCI_LLM_API_KEY is not set");
    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;
    body["messages"] = json::array();
    for (const auto& m : messages)
        body["messages"].push_back(
            {{"role", m.role == Role::human ? "user" : to_string(m.role)}, {"content", m.content}});

    const auto [origin, prefix] = split_url(config_.base_url);
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(config_.timeout_s);
    client.set_bearer_token_auth(config_.api_key);
    const auto res = client.Post(prefix + "/v1/chat/completions", body.dump(), "application/json");
    if (!res)
        throw ProviderError("provider unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderError("provider returned HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 200));
    try {
        const auto j = json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed provider response: ") + e.what());
    }
}

HttpLiteratureClient::HttpLiteratureClient(std::string endpoint) : endpoint_(std::move(endpoint)) {}

std::vector<LiteratureRecord> HttpLiteratureClient::search(const std::string& query, std::size_t limit)
{
    std::lock_guard lock(mutex_);
    if (last_) {
        const auto next = *last_ + std::chrono::seconds(1);
        std::this_thread::sleep_until(next);
    }
    last_ = std::chrono::steady_clock::now();

    const auto [origin, path] = split_url(endpoint_);
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    httplib::Headers headers;
    if (const char* key = std::getenv("CHATBCI_LITERATURE_API_KEY"))
        headers.emplace("x-api-key", key);
    const httplib::Params params{
        {"query", query}, {"fields", "title,abstract,year"}, {"limit", std::to_string(limit)}};
    const auto res = client.Get(path.empty() ? "/" : path, params, headers);
    if (!res)
        throw ProviderError("literature search unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw ProviderError("literature search returned HTTP " + std::to_string(res->status));
    std::vector<LiteratureRecord> out;
    try {
        const auto j = json::parse(res->body);
        for (const auto& r : j.value("data", json::array())) {
            LiteratureRecord rec;
            rec.title = r.value("title", "");
            if (r.contains("abstract") && r["abstract"].is_string())
                rec.abstract = r["abstract"].get<std::string>();
            if (r.contains("year") && r["year"].is_number_integer())
                rec.year = r["year"].get<int>();
            out.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed literature response: ") + e.what());
    }
    return out;
}

} // namespace chatbci
