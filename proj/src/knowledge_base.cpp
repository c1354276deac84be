// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/knowledge_base.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

namespace chatbci {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kSuffix = ".kb.json";
constexpr std::size_t kFirstLineLimit = 120;
constexpr std::size_t kSniffBytes = 4096;

} // namespace

std::size_t token_estimate(std::string_view text)
{
    return (text.size() + 3) / 4;
}

void KnowledgeDoc::check() const
{
    if (doc_id.empty())
        throw FormatError("knowledge doc without id");
    if (levels[0].empty())
        throw FormatError("knowledge doc '" + doc_id + "' has no level 0 text");
    for (int g = 0; g < 2; ++g)
        if (token_estimate(level(g)) > token_estimate(level(g + 1)))
            throw FormatError("knowledge doc '" + doc_id + "': level " + std::to_string(g) +
                              " is longer than level " + std::to_string(g + 1));
}

json KnowledgeDoc::to_json() const
{
    return {{"tags", tags}, {"level0", levels[0]}, {"level1", levels[1]}, {"level2", levels[2]}};
}

KnowledgeDoc KnowledgeDoc::from_json(const json& j, std::string id)
{
    KnowledgeDoc d;
    d.doc_id = std::move(id);
    try {
        d.tags = j.value("tags", std::vector<std::string>{});
        d.levels[0] = j.at("level0").get<std::string>();
        d.levels[1] = j.value("level1", d.levels[0]);
        d.levels[2] = j.value("level2", d.levels[1]);
    } catch (const json::exception& e) {
        throw FormatError("knowledge doc '" + d.doc_id + "': " + e.what());
    }
    d.check();
    return d;
}

KnowledgeStore::KnowledgeStore(fs::path dir) : dir_(std::move(dir)) {}

KnowledgeStore KnowledgeStore::load(const fs::path& dir)
{
    KnowledgeStore store(dir);
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw IOError("knowledge directory not found: " + dir.string());
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.size() <= kSuffix.size() || !name.ends_with(kSuffix))
            continue;
        json j;
        try {
            j = json::parse(read_file(entry.path()));
        } catch (const json::parse_error& e) {
            throw FormatError(name + ": " + e.what());
        }
        auto doc = KnowledgeDoc::from_json(j, name.substr(0, name.size() - kSuffix.size()));
        store.docs_[doc.doc_id] = std::move(doc);
    }
    return store;
}

void KnowledgeStore::put(const KnowledgeDoc& doc)
{
    doc.check();
    std::unique_lock lock(*mutex_);
    if (dir_) {
        fs::create_directories(*dir_);
        write_file_atomic(*dir_ / (doc.doc_id + std::string(kSuffix)), doc.to_json().dump(2) + "\n");
    }
    docs_[doc.doc_id] = doc;
}

std::optional<KnowledgeDoc> KnowledgeStore::get(const std::string& doc_id) const
{
    std::shared_lock lock(*mutex_);
    const auto it = docs_.find(doc_id);
    if (it == docs_.end())
        return std::nullopt;
    return it->second;
}

std::vector<KnowledgeDoc> KnowledgeStore::snapshot() const
{
    std::shared_lock lock(*mutex_);
    std::vector<KnowledgeDoc> out;
    out.reserve(docs_.size());
    for (const auto& [id, doc] : docs_)
        out.push_back(doc);
    return out;
}

std::size_t KnowledgeStore::size() const
{
    std::shared_lock lock(*mutex_);
    return docs_.size();
}

double retrieval_score(const KnowledgeDoc& doc, std::string_view query)
{
    std::string text;
    for (const auto& t : doc.tags)
        text += t + " ";
    text += doc.level(1);
    return jaccard(word_set(query), word_set(text));
}

std::vector<ScoredDoc> retrieve(const std::vector<KnowledgeDoc>& docs, std::string_view query, std::size_t k)
{
    std::vector<ScoredDoc> scored;
    for (const auto& d : docs) {
        const double s = retrieval_score(d, query);
        if (s > 0.0)
            scored.push_back({d, s});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score != b.score ? a.score > b.score : a.doc.doc_id < b.doc.doc_id;
    });
    if (scored.size() > k)
        scored.resize(k);
    return scored;
}

std::string ContextBundle::render() const
{
    std::string out;
    for (const auto& e : excerpts) {
        if (!out.empty())
            out += "\n\n";
        out += "[" + e.doc_id + "]\n" + e.text;
    }
    return out;
}

json ContextBundle::to_json() const
{
    json j;
    j["budget"] = budget;
    j["total_tokens"] = total_tokens;
    j["excerpts"] = json::array();
    for (const auto& e : excerpts)
        j["excerpts"].push_back({{"doc_id", e.doc_id}, {"level", e.level}, {"tokens", e.tokens}});
    return j;
}

ContextBundle assemble_context(const std::vector<KnowledgeDoc>& ranked, std::size_t budget)
{
    if (budget == 0)
        throw PreconditionError("context budget must be positive");
    ContextBundle bundle;
    bundle.budget = budget;
    for (const auto& doc : ranked) {
        const auto remaining = budget - bundle.total_tokens;
        for (int g = 2; g >= 0; --g) {
            const auto tokens = token_estimate(doc.level(g));
            if (tokens <= remaining) {
                bundle.excerpts.push_back({doc.doc_id, g, doc.level(g), tokens});
                bundle.total_tokens += tokens;
                break;
            }
        }
    }
    return bundle;
}

namespace {

struct TextInfo {
    bool text = false;
    std::string first_line;
    std::vector<std::string> headings;
};

bool is_heading(std::string_view line)
{
    std::size_t n = 0;
    while (n < line.size() && line[n] == '#')
        ++n;
    return n >= 1 && n <= 6 && n < line.size() && line[n] == ' ';
}

TextInfo inspect(const fs::path& path, int level, std::string& error)
{
    TextInfo info;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        error = "cannot open";
        return info;
    }
    std::string sniff(kSniffBytes, '\0');
    in.read(sniff.data(), static_cast<std::streamsize>(sniff.size()));
    sniff.resize(static_cast<std::size_t>(in.gcount()));
    if (sniff.find('\0') != std::string::npos)
        return info;
    info.text = true;
    if (level < 1)
        return info;
    std::string body = sniff;
    if (level >= 2) {
        std::ostringstream rest;
        rest << in.rdbuf();
        body += rest.str();
    }
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto t = trim(line);
        if (info.first_line.empty() && !t.empty()) {
            info.first_line = t.size() > kFirstLineLimit ? t.substr(0, kFirstLineLimit) + "..." : t;
            if (level < 2)
                break;
        }
        if (is_heading(t))
            info.headings.push_back(t);
    }
    return info;
}

void walk(const fs::path& dir, int depth, int level, std::string& out)
{
    const std::string indent(static_cast<std::size_t>(2 * depth), ' ');
    std::vector<fs::directory_entry> entries;
    std::error_code ec;
    fs::directory_iterator it(dir, ec);
    if (ec) {
        out += indent + "[unreadable: " + ec.message() + "]\n";
        return;
    }
    for (const auto& e : it)
        entries.push_back(e);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.path().filename().string() < b.path().filename().string();
    });
    for (const auto& e : entries) {
        const auto name = e.path().filename().string();
        std::error_code sec;
        if (e.is_symlink(sec)) {
            out += indent + name + " -> " + fs::read_symlink(e.path(), sec).string() + "\n";
            continue;
        }
        if (e.is_directory(sec)) {
            out += indent + name + "/\n";
            walk(e.path(), depth + 1, level, out);
            continue;
        }
        if (!e.is_regular_file(sec)) {
            out += indent + name + " [special file]\n";
            continue;
        }
        const auto size = e.file_size(sec);
        if (sec) {
            out += indent + name + " [unreadable: " + sec.message() + "]\n";
            continue;
        }
        std::string error;
        const auto info = inspect(e.path(), level, error);
        if (!error.empty()) {
            out += indent + name + " (" + std::to_string(size) + " B) [unreadable: " + error + "]\n";
            continue;
        }
        out += indent + name + " (" + std::to_string(size) + " B)\n";
        if (level >= 1 && info.text && !info.first_line.empty())
            out += indent + "  | " + info.first_line + "\n";
        if (level >= 2)
            for (const auto& h : info.headings)
                out += indent + "  " + h + "\n";
    }
}

} // namespace

std::string summarize_directory(const fs::path& root, int level)
{
    if (level < 0 || level > 2)
        throw PreconditionError("granularity must be 0, 1 or 2");
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw IOError("not a readable directory: " + root.string());
    auto name = root.filename().string();
    if (name.empty())
        name = root.parent_path().filename().string();
    std::string out = name + "/\n";
    walk(root, 1, level, out);
    return out;
}

} // namespace chatbci
