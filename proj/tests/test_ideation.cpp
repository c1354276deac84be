// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_helpers.hpp"

#include <chatbci/error.hpp>
#include <chatbci/ideation.hpp>
#include <chatbci/mock_replies.hpp>
#include <chatbci/rng.hpp>
#include <chatbci/util.hpp>

#include <gtest/gtest.h>

using namespace chatbci;
using chatbci::testing::TempDir;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(CHATBCI_FIXTURES) / "ideation";

SessionOptions quiet_options()
{
    SessionOptions o;
    o.clock = sequence_clock();
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
}

// Independent scorer: lowercase, split on anything non-alphanumeric,
// count shared distinct words.
double oracle_jaccard(const std::string& a, const std::string& b)
{
    auto words = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (const char ch : s + " ") {
            if (std::isalnum(static_cast<unsigned char>(ch)))
                cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            else if (!cur.empty()) {
                if (std::find(out.begin(), out.end(), cur) == out.end())
                    out.push_back(cur);
                cur.clear();
            }
        }
        return out;
    };
    const auto wa = words(a), wb = words(b);
    std::size_t shared = 0;
    for (const auto& w : wa)
        shared += std::find(wb.begin(), wb.end(), w) != wb.end();
    const auto uni = wa.size() + wb.size() - shared;
    return uni == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(uni);
}

} // namespace

TEST(ParseIdeas, TableRowOneFixture)
{
    const auto parsed = parse_ideas(read_file(kFixtures / "reference_card.txt"));
    ASSERT_EQ(parsed.cards.size(), 1u);
    const auto& c = parsed.cards[0];
    EXPECT_EQ(c.research_question,
              "What are the optimal EEG frequency bands for decoding, and how do they vary across subjects?");
    EXPECT_EQ(c.gap, "Inconsistent findings on band contributions.");
    EXPECT_EQ(c.motivation, "Personalization can improve performance.");
    EXPECT_EQ(c.approach, "Perform detailed frequency band analysis.");
    EXPECT_EQ(parsed.report.dropped, 0u);
}

TEST(ParseIdeas, MissingGapDropsIdea)
{
    const std::string text = "Question: Q1?\nMotivation: M1\nApproach: A1\n\n"
                             "Question: Q2?\nGap: G2\nMotivation: M2\nApproach: A2\n";
    const auto parsed = parse_ideas(text);
    ASSERT_EQ(parsed.cards.size(), 1u);
    EXPECT_EQ(parsed.cards[0].research_question, "Q2?");
    EXPECT_EQ(parsed.report.dropped, 1u);
    ASSERT_EQ(parsed.report.problems.size(), 1u);
    EXPECT_NE(parsed.report.problems[0].find("Gap"), std::string::npos);
}

TEST(ParseIdeas, ToleratesMarkdownDecoration)
{
    const std::string text = "1. Idea\n- **Research Question:** Does X help?\n* **Gap**: little work\n"
                             "  Motivation:   better BCIs  \n**Approach:** try it\n";
    const auto parsed = parse_ideas(text);
    ASSERT_EQ(parsed.cards.size(), 1u);
    EXPECT_EQ(parsed.cards[0].research_question, "Does X help?");
    EXPECT_EQ(parsed.cards[0].gap, "little work");
    EXPECT_EQ(parsed.cards[0].motivation, "better BCIs");
    EXPECT_EQ(parsed.cards[0].approach, "try it");
}

TEST(ParseIdeas, FieldsAreSubstringsOfReply)
{
    Rng rng(5);
    const char* labels[] = {"Question", "Gap", "Motivation", "Approach", "Note", "question", "**Gap**"};
    for (int t = 0; t < 300; ++t) {
        std::string text;
        const auto lines = rng.uniform_int(0, 20);
        for (int i = 0; i < lines; ++i) {
            text += std::string(rng.bernoulli(0.3) ? "  - " : "") + labels[rng.uniform_int(0, 6)] + ":" +
                    (rng.bernoulli(0.5) ? " " : "") + "w" + std::to_string(rng.uniform_int(0, 99)) + " x\n";
        }
        for (const auto& c : parse_ideas(text).cards)
            for (const auto* f : {&c.research_question, &c.gap, &c.motivation, &c.approach}) {
                EXPECT_FALSE(f->empty());
                EXPECT_NE(text.find(*f), std::string::npos) << *f;
            }
    }
}

TEST(GenerateIdeas, ExactlyNCardsFromMock)
{
    auto provider = MockProvider::with_defaults();
    ChatSession session(provider, nullptr, quiet_options());
    const auto out = generate_ideas(3, default_ideation_topic(), session);
    ASSERT_EQ(out.cards.size(), 3u);
    EXPECT_EQ(out.cards[0].id, "idea-1");
    EXPECT_EQ(out.cards[2].id, "idea-3");
    EXPECT_EQ(out.cards[0].gap, "Inconsistent findings on band contributions.");
    EXPECT_THROW(generate_ideas(0, "x", session), PreconditionError);
}

TEST(GenerateIdeas, NothingParseableRaisesWithRawText)
{
    MockProvider provider;
    ChatSession session(provider, nullptr, quiet_options());
    try {
        generate_ideas(2, "anything", session);
        FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
        EXPECT_NE(std::string(e.what()).find("[mock] no canned reply"), std::string::npos);
    }
}

TEST(Novelty, VerbatimTitleGivesZero)
{
    IdeaCard card;
    card.research_question = "Can graph-based representations of EEG signals improve motor imagery classification?";
    MockLiteratureClient client({{card.research_question, "", 2020}, {"Unrelated", "text", 2001}});
    const auto res = novelty_check(card, client);
    ASSERT_TRUE(res.score);
    EXPECT_DOUBLE_EQ(*res.score, 0.0);
    EXPECT_DOUBLE_EQ(res.matches.front().similarity, 1.0);
    EXPECT_EQ(card.novelty_score, res.score);
}

TEST(Novelty, EmptyCorpusGivesOne)
{
    IdeaCard card;
    card.research_question = "Anything at all?";
    MockLiteratureClient client;
    EXPECT_DOUBLE_EQ(*novelty_check(card, client).score, 1.0);
}

TEST(Novelty, MatchesBruteForceOracle)
{
    auto client = MockLiteratureClient::from_file(kFixtures / "corpus.json");
    const auto corpus = nlohmann::json::parse(read_file(kFixtures / "corpus.json"));
    ASSERT_EQ(corpus.size(), 5u);
    IdeaCard card;
    card.research_question =
        "What are the optimal EEG frequency bands for decoding, and how do they vary across subjects?";
    const auto res = novelty_check(card, client);
    ASSERT_EQ(res.matches.size(), 5u);
    double max_sim = 0;
    for (const auto& r : corpus) {
        const auto title = r["title"].get<std::string>();
        const double expected =
            oracle_jaccard(card.research_question, title + " " + r["abstract"].get<std::string>());
        max_sim = std::max(max_sim, expected);
        const auto it = std::find_if(res.matches.begin(), res.matches.end(),
                                     [&](const LiteratureMatch& m) { return m.title == title; });
        ASSERT_NE(it, res.matches.end());
        EXPECT_NEAR(it->similarity, expected, 1e-12) << title;
    }
    EXPECT_NEAR(*res.score, 1.0 - max_sim, 1e-12);
    for (std::size_t i = 1; i < res.matches.size(); ++i)
        EXPECT_GE(res.matches[i - 1].similarity, res.matches[i].similarity);
}

TEST(Novelty, NonIncreasingAsCorpusGrows)
{
    auto full = MockLiteratureClient::from_file(kFixtures / "corpus.json");
    const auto records = full.search("", 100);
    IdeaCard card;
    card.research_question = "How does session-to-session variability affect frequency band decoding?";
    MockLiteratureClient growing;
    double previous = 1.0;
    for (const auto& r : records) {
        growing.add(r);
        const double score = *novelty_check(card, growing).score;
        EXPECT_LE(score, previous);
        previous = score;
    }
}

TEST(Novelty, ClientFailureLeavesScoreUnset)
{
    IdeaCard card;
    card.research_question = "Q?";
    card.novelty_score = 0.5;
    MockLiteratureClient client;
    client.set_failing(true);
    const auto res = novelty_check(card, client);
    EXPECT_FALSE(res.score);
    EXPECT_FALSE(card.novelty_score);
    EXPECT_TRUE(res.matches.empty());
    EXPECT_FALSE(res.warning.empty());
}

TEST(IdeaDeck, JsonlRoundTrip)
{
    TempDir dir;
    const auto cards = parse_ideas(canned_idea_reply(4)).cards;
    ASSERT_EQ(cards.size(), 4u);
    append_ideas(dir / "ideas.jsonl", {cards[0], cards[1]});
    append_ideas(dir / "ideas.jsonl", {cards[2], cards[3]});
    const auto back = read_ideas(dir / "ideas.jsonl");
    ASSERT_EQ(back.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i)
        EXPECT_EQ(back[i].to_json(), cards[i].to_json());
}
