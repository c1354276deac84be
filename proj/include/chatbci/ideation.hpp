// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/llm_bridge.hpp>

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

struct LiteratureMatch {
    std::string title;
    std::optional<int> year;
    double similarity = 0.0;

    nlohmann::json to_json() const;
};

struct IdeaCard {
    std::string id;
    std::string research_question;
    std::string gap;
    std::string motivation;
    std::string approach;
    std::optional<double> novelty_score;
    std::vector<LiteratureMatch> matches;

    nlohmann::json to_json() const;
    static IdeaCard from_json(const nlohmann::json& j);
};

struct ParseReport {
    std::size_t parsed = 0;
    std::size_t dropped = 0;
    std::vector<std::string> problems;

    nlohmann::json to_json() const;
};

struct ParsedIdeas {
    std::vector<IdeaCard> cards;
    ParseReport report;
};

/// Line-anchored parser for "Question:", "Gap:", "Motivation:" and
/// "Approach:" sections ("Research Question:" is accepted too). A Question
/// label opens a new idea; ideas missing any field are dropped and reported.
/// Every field is a verbatim substring of `text`.
ParsedIdeas parse_ideas(const std::string& text);

std::string default_ideation_topic();
/// The prompt sent to the provider for `n` ideas on `topic`.
std::string ideation_prompt(std::size_t n, const std::string& topic);

struct GeneratedIdeas {
    std::vector<IdeaCard> cards;
    ParseReport report;
    std::string raw;
};

/// Asks the session's provider for `n` ideas; keeps at most `n` parsed
/// cards with ids idea-1..idea-n. Throws GenerationError (message includes
/// the raw reply) when nothing parses, PreconditionError when n is 0.
GeneratedIdeas generate_ideas(std::size_t n, const std::string& topic, ChatSession& session);

struct LiteratureRecord {
    std::string title;
    std::string abstract;
    std::optional<int> year;
};

class LiteratureClient
{
public:
    virtual ~LiteratureClient() = default;
    /// Throws ProviderError on failure.
    virtual std::vector<LiteratureRecord> search(const std::string& query, std::size_t limit) = 0;
};

/// Returns its whole fixture corpus for every query.
class MockLiteratureClient : public LiteratureClient
{
public:
    explicit MockLiteratureClient(std::vector<LiteratureRecord> corpus = {}) : corpus_(std::move(corpus)) {}
    /// Reads a JSON array of {title, abstract, year}.
    static MockLiteratureClient from_file(const std::filesystem::path& path);
    void add(LiteratureRecord r) { corpus_.push_back(std::move(r)); }
    void set_failing(bool failing) { failing_ = failing; }
    std::vector<LiteratureRecord> search(const std::string& query, std::size_t limit) override;

private:
    std::vector<LiteratureRecord> corpus_;
    bool failing_ = false;
};

/// Scholarly search over HTTP (GET endpoint?query=&fields=&limit=), at most
/// one request per second per client.
class HttpLiteratureClient : public LiteratureClient
{
public:
    explicit HttpLiteratureClient(std::string endpoint = "https://api.semanticscholar.org/graph/v1/paper/search");
    std::vector<LiteratureRecord> search(const std::string& query, std::size_t limit) override;

private:
    std::string endpoint_;
    std::mutex mutex_;
    std::optional<std::chrono::steady_clock::time_point> last_;
};

struct NoveltyResult {
    std::optional<double> score;
    std::vector<LiteratureMatch> matches;
    std::string warning;
};

/// Word Jaccard of the research question against each record's title plus
/// abstract; novelty = 1 − max similarity. Updates the card in place. On
/// client failure the score stays unset and the warning is filled.
NoveltyResult novelty_check(IdeaCard& card, LiteratureClient& client, std::size_t limit = 20);

/// Appends cards to an ideas.jsonl deck.
void append_ideas(const std::filesystem::path& path, const std::vector<IdeaCard>& cards);
std::vector<IdeaCard> read_ideas(const std::filesystem::path& path);

} // namespace chatbci
