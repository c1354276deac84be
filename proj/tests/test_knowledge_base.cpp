// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_helpers.hpp"

#include <chatbci/error.hpp>
#include <chatbci/knowledge_base.hpp>
#include <chatbci/rng.hpp>
#include <chatbci/util.hpp>

#include <gtest/gtest.h>

#include <sys/stat.h>

using namespace chatbci;
using chatbci::testing::TempDir;

namespace {

KnowledgeDoc make_doc(std::string id, std::vector<std::string> tags, std::string l0, std::string l1, std::string l2)
{
    KnowledgeDoc d;
    d.doc_id = std::move(id);
    d.tags = std::move(tags);
    d.levels = {std::move(l0), std::move(l1), std::move(l2)};
    return d;
}

std::string random_words(Rng& rng, std::size_t n)
{
    static const char* vocab[] = {"eeg", "eog", "filter", "cue", "alpha", "beta", "mu", "trial", "epoch",
                                  "saccade", "blink", "motor", "imagery", "decoder", "band", "power"};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i)
            out += ' ';
        out += vocab[rng.uniform_int(0, 15)];
    }
    return out;
}

KnowledgeDoc random_doc(Rng& rng, std::size_t i)
{
    const auto a = static_cast<std::size_t>(rng.uniform_int(1, 20));
    const auto b = a + static_cast<std::size_t>(rng.uniform_int(0, 60));
    const auto c = b + static_cast<std::size_t>(rng.uniform_int(0, 300));
    return make_doc("d" + std::to_string(i), {random_words(rng, 2)}, random_words(rng, a), random_words(rng, b),
                    random_words(rng, c));
}

std::vector<std::string> listed_paths(const std::string& summary)
{
    // entry lines: indentation, then a name not starting with '|' or '#'
    std::vector<std::string> out;
    for (const auto& line : split(summary, '\n')) {
        const auto t = trim(line);
        if (!t.empty() && t[0] != '|' && t[0] != '#')
            out.push_back(line);
    }
    return out;
}

} // namespace

TEST(TokenEstimate, IsCeilOfQuarterLength)
{
    EXPECT_EQ(token_estimate(""), 0u);
    EXPECT_EQ(token_estimate("a"), 1u);
    EXPECT_EQ(token_estimate("abcd"), 1u);
    EXPECT_EQ(token_estimate("abcde"), 2u);
    for (std::size_t n = 0; n < 200; ++n)
        EXPECT_EQ(token_estimate(std::string(n, 'x')), static_cast<std::size_t>(std::ceil(n / 4.0)));
}

TEST(KnowledgeDocTest, Invariants)
{
    EXPECT_THROW(make_doc("x", {}, "", "a", "b").check(), FormatError);
    EXPECT_THROW(make_doc("x", {}, "long level zero text", "short", "short").check(), FormatError);
    EXPECT_NO_THROW(make_doc("x", {}, "one", "one two", "one two three").check());
    const auto d = KnowledgeDoc::from_json({{"tags", {"a"}}, {"level0", "only"}}, "id");
    EXPECT_EQ(d.level(2), "only");
    EXPECT_THROW(KnowledgeDoc::from_json({{"tags", {"a"}}}, "id"), FormatError);
}

TEST(KnowledgeStoreTest, SeedDocsLoad)
{
    const auto store = KnowledgeStore::load(CHATBCI_KB_DIR);
    EXPECT_GE(store.size(), 3u);
    for (const char* id : {"eog-blink-saccade", "cue-evoked-vs-motor", "highpass-4hz-history"})
        EXPECT_TRUE(store.get(id)) << id;
    const auto hits = retrieve(store.snapshot(), "why do EOG channels show blink saccade artifacts", 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].doc.doc_id, "eog-blink-saccade");
}

TEST(KnowledgeStoreTest, PutPersistsAtomically)
{
    TempDir dir;
    KnowledgeStore store(dir.path());
    store.put(make_doc("a", {"x"}, "one", "one two", "one two three"));
    store.put(make_doc("a", {"y"}, "uno", "uno dos", "uno dos tres"));
    const auto reloaded = KnowledgeStore::load(dir.path());
    ASSERT_EQ(reloaded.size(), 1u);
    EXPECT_EQ(reloaded.get("a")->tags, std::vector<std::string>{"y"});
    EXPECT_FALSE(reloaded.get("b"));
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path()))
        ++files;
    EXPECT_EQ(files, 1u);
}

TEST(Retrieve, FullTagSetRanksFirst)
{
    const std::vector<KnowledgeDoc> docs{
        make_doc("a", {"filter", "highpass"}, "f", "filters remove drift", "filters remove drift."),
        make_doc("b", {"eog", "blink"}, "e", "eye artifacts", "eye artifacts."),
        make_doc("c", {"eog"}, "e", "filter design", "filter design."),
    };
    const auto hits = retrieve(docs, "eog blink", 3);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].doc.doc_id, "b");
}

TEST(Retrieve, NoSharedWordsGivesEmptyResult)
{
    const std::vector<KnowledgeDoc> docs{make_doc("a", {"eeg"}, "x", "alpha rhythm", "alpha rhythm")};
    EXPECT_TRUE(retrieve(docs, "tongue feet", 5).empty());
    EXPECT_TRUE(retrieve(docs, "", 5).empty());
}

TEST(Retrieve, TiesBreakByDocId)
{
    const std::vector<KnowledgeDoc> docs{make_doc("z", {"eeg"}, "x", "x", "x"),
                                         make_doc("m", {"eeg"}, "x", "x", "x"),
                                         make_doc("a", {"eeg"}, "x", "x", "x")};
    const auto hits = retrieve(docs, "eeg", 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].doc.doc_id, "a");
    EXPECT_EQ(hits[1].doc.doc_id, "m");
    EXPECT_EQ(hits[2].doc.doc_id, "z");
}

TEST(Retrieve, TopOneMatchesExhaustiveScoring)
{
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<KnowledgeDoc> docs;
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 12));
        for (std::size_t i = 0; i < n; ++i)
            docs.push_back(random_doc(rng, i));
        const auto query = random_words(rng, 3);
        // brute force: explicit set intersection and union sizes
        const auto q = word_set(query);
        double best = 0.0;
        std::string best_id;
        for (const auto& d : docs) {
            std::set<std::string> w;
            for (const auto& t : d.tags)
                for (const auto& x : word_set(t))
                    w.insert(x);
            for (const auto& x : word_set(d.level(1)))
                w.insert(x);
            std::size_t inter = 0;
            for (const auto& x : q)
                inter += w.count(x);
            const double s = static_cast<double>(inter) / static_cast<double>(q.size() + w.size() - inter);
            if (s > best || (s == best && s > 0 && d.doc_id < best_id)) {
                best = s;
                best_id = d.doc_id;
            }
        }
        const auto hits = retrieve(docs, query, 1);
        if (best == 0.0) {
            EXPECT_TRUE(hits.empty());
        } else {
            ASSERT_EQ(hits.size(), 1u);
            EXPECT_EQ(hits[0].doc.doc_id, best_id);
            EXPECT_DOUBLE_EQ(hits[0].score, best);
        }
    }
}

TEST(AssembleContext, SingleDocAtFinestLevel)
{
    const std::vector<KnowledgeDoc> docs{make_doc("a", {}, "abcd", "abcdefgh", "abcdefghijkl")};  // 1, 2, 3 tokens
    const auto b = assemble_context(docs, 3);
    ASSERT_EQ(b.excerpts.size(), 1u);
    EXPECT_EQ(b.excerpts[0].level, 2);
    EXPECT_EQ(b.total_tokens, 3u);
}

TEST(AssembleContext, BudgetBelowEveryLevelZeroIsEmpty)
{
    const std::vector<KnowledgeDoc> docs{make_doc("a", {}, std::string(40, 'a'), std::string(80, 'a'),
                                                  std::string(160, 'a')),
                                         make_doc("b", {}, std::string(20, 'b'), std::string(30, 'b'),
                                                  std::string(50, 'b'))};
    const auto b = assemble_context(docs, 4);
    EXPECT_TRUE(b.excerpts.empty());
    EXPECT_EQ(b.total_tokens, 0u);
    EXPECT_THROW(assemble_context(docs, 0), PreconditionError);
}

TEST(AssembleContext, GreedyCoarsensSecondDoc)
{
    // tokens: doc1 (2, 5, 10), doc2 (3, 8, 20), doc3 (1, 1, 2); budget 14.
    // doc1: level 2 (10) fits, remaining 4. doc2: 20 and 8 do not fit, 3 does,
    // remaining 1. doc3: 2 does not fit, level 1 (1) fits, remaining 0.
    const std::vector<KnowledgeDoc> docs{
        make_doc("d1", {}, std::string(8, 'a'), std::string(20, 'a'), std::string(40, 'a')),
        make_doc("d2", {}, std::string(12, 'b'), std::string(32, 'b'), std::string(80, 'b')),
        make_doc("d3", {}, std::string(4, 'c'), std::string(4, 'c'), std::string(8, 'c')),
    };
    const auto b = assemble_context(docs, 14);
    ASSERT_EQ(b.excerpts.size(), 3u);
    EXPECT_EQ(b.excerpts[0].level, 2);
    EXPECT_EQ(b.excerpts[1].level, 0);
    EXPECT_EQ(b.excerpts[2].level, 1);
    EXPECT_EQ(b.total_tokens, 14u);
    EXPECT_EQ(b.render(), "[d1]\n" + std::string(40, 'a') + "\n\n[d2]\n" + std::string(12, 'b') + "\n\n[d3]\n" +
                              std::string(4, 'c'));
}

TEST(AssembleContext, NeverExceedsBudgetOverRandomStores)
{
    Rng rng(2026);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<KnowledgeDoc> docs;
        const auto n = static_cast<std::size_t>(rng.uniform_int(0, 15));
        for (std::size_t i = 0; i < n; ++i)
            docs.push_back(random_doc(rng, i));
        const auto budget = static_cast<std::size_t>(rng.uniform_int(1, 400));
        const auto b = assemble_context(docs, budget);
        std::size_t sum = 0;
        for (const auto& e : b.excerpts)
            sum += token_estimate(e.text);
        ASSERT_EQ(sum, b.total_tokens);
        ASSERT_LE(b.total_tokens, budget) << "trial " << trial;
    }
}

TEST(SummarizeDirectory, MatchesGoldenFixtures)
{
    const std::filesystem::path root = std::filesystem::path(CHATBCI_FIXTURES) / "summarize";
    for (int level = 0; level <= 2; ++level)
        EXPECT_EQ(summarize_directory(root / "tree", level),
                  read_file(root / ("level" + std::to_string(level) + ".txt")))
            << "level " << level;
}

TEST(SummarizeDirectory, EmptyDirectoryIsRootOnly)
{
    TempDir dir("kb-empty");
    EXPECT_EQ(summarize_directory(dir.path(), 0), dir.path().filename().string() + "/\n");
}

TEST(SummarizeDirectory, FirstLineAtLevelOne)
{
    TempDir dir;
    write_file(dir / "a.txt", "hello");
    const auto s = summarize_directory(dir.path(), 1);
    EXPECT_NE(s.find("a.txt"), std::string::npos);
    EXPECT_NE(s.find("hello"), std::string::npos);
    EXPECT_EQ(summarize_directory(dir.path(), 0).find("hello"), std::string::npos);
}

TEST(SummarizeDirectory, LevelsAreMonotone)
{
    const auto root = std::filesystem::path(CHATBCI_FIXTURES) / "summarize" / "tree";
    const auto p0 = listed_paths(summarize_directory(root, 0));
    const auto p1 = listed_paths(summarize_directory(root, 1));
    const auto p2 = listed_paths(summarize_directory(root, 2));
    EXPECT_EQ(p0, p1);
    EXPECT_EQ(p1, p2);
    EXPECT_LE(summarize_directory(root, 0).size(), summarize_directory(root, 1).size());
    EXPECT_LE(summarize_directory(root, 1).size(), summarize_directory(root, 2).size());
}

TEST(SummarizeDirectory, SpecialEntriesAreListedNotFatal)
{
    TempDir dir;
    write_file(dir / "ok.md", "# Title\n");
    ASSERT_EQ(::mkfifo((dir / "pipe").c_str(), 0600), 0);
    std::filesystem::create_symlink(dir / "missing", dir / "dangling");
    const auto s = summarize_directory(dir.path(), 2);
    EXPECT_NE(s.find("pipe [special file]"), std::string::npos);
    EXPECT_NE(s.find("dangling -> "), std::string::npos);
    EXPECT_NE(s.find("# Title"), std::string::npos);
    EXPECT_THROW(summarize_directory(dir / "nope", 0), IOError);
    EXPECT_THROW(summarize_directory(dir.path(), 3), PreconditionError);
}
