// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

/// ceil(len / 4): the provider-independent token heuristic.
std::size_t token_estimate(std::string_view text);

/// A document held at three granularities: 0 one line, 1 paragraph, 2 full.
struct KnowledgeDoc {
    std::string doc_id;
    std::vector<std::string> tags;
    std::array<std::string, 3> levels;

    const std::string& level(int g) const { return levels.at(static_cast<std::size_t>(g)); }
    /// Throws FormatError: empty id or level 0, or a coarser level estimated
    /// larger than a finer one.
    void check() const;
    nlohmann::json to_json() const;
    /// Missing level1 / level2 inherit the next coarser level.
    static KnowledgeDoc from_json(const nlohmann::json& j, std::string doc_id);
};

/// Doc store backed by a directory of <doc_id>.kb.json files. Readers get a
/// consistent snapshot; writes replace whole docs atomically.
class KnowledgeStore
{
public:
    KnowledgeStore() = default;
    explicit KnowledgeStore(std::filesystem::path dir);

    /// Reads every *.kb.json in the directory (FormatError on bad files).
    static KnowledgeStore load(const std::filesystem::path& dir);

    /// Inserts or replaces a doc; persisted when the store has a directory.
    void put(const KnowledgeDoc& doc);
    std::optional<KnowledgeDoc> get(const std::string& doc_id) const;
    /// All docs ordered by doc_id.
    std::vector<KnowledgeDoc> snapshot() const;
    std::size_t size() const;
    const std::optional<std::filesystem::path>& directory() const { return dir_; }

private:
    std::optional<std::filesystem::path> dir_;
    mutable std::shared_ptr<std::shared_mutex> mutex_ = std::make_shared<std::shared_mutex>();
    std::map<std::string, KnowledgeDoc> docs_;
};

struct ScoredDoc {
    KnowledgeDoc doc;
    double score = 0.0;
};

/// Word Jaccard between the query and the doc's tags plus level-1 text.
double retrieval_score(const KnowledgeDoc& doc, std::string_view query);

/// Docs with score > 0, by descending score then ascending doc_id; at most k.
std::vector<ScoredDoc> retrieve(const std::vector<KnowledgeDoc>& docs, std::string_view query, std::size_t k);

struct ContextExcerpt {
    std::string doc_id;
    int level = 0;
    std::string text;
    std::size_t tokens = 0;
};

struct ContextBundle {
    std::vector<ContextExcerpt> excerpts;
    std::size_t total_tokens = 0;
    std::size_t budget = 0;

    /// Excerpts joined as "[doc_id]\ntext" blocks.
    std::string render() const;
    nlohmann::json to_json() const;
};

/// Greedy in rank order: each doc at the finest level whose estimate fits
/// the remaining budget, else skipped. Throws PreconditionError on budget 0.
ContextBundle assemble_context(const std::vector<KnowledgeDoc>& ranked, std::size_t budget_tokens);

/// Plain-text directory summary. Level 0 lists the tree with file sizes,
/// level 1 adds each text file's first non-empty line, level 2 adds its
/// Markdown headings. Children are sorted lexicographically; unreadable
/// entries are listed with the reason. Throws IOError if `root` is not a
/// readable directory.
std::string summarize_directory(const std::filesystem::path& root, int level);

} // namespace chatbci
