// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/ideation.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <thread>

namespace chatbci {

using nlohmann::json;

json LiteratureMatch::to_json() const
{
    return {{"title", title}, {"year", year ? json(*year) : json(nullptr)}, {"similarity", similarity}};
}

json IdeaCard::to_json() const
{
    json j{{"id", id},
           {"research_question", research_question},
           {"gap", gap},
           {"motivation", motivation},
           {"approach", approach},
           {"novelty_score", novelty_score ? json(*novelty_score) : json(nullptr)}};
    j["matches"] = json::array();
    for (const auto& m : matches)
        j["matches"].push_back(m.to_json());
    return j;
}

IdeaCard IdeaCard::from_json(const json& j)
{
    IdeaCard c;
    c.id = j.value("id", "");
    c.research_question = j.at("research_question").get<std::string>();
    c.gap = j.at("gap").get<std::string>();
    c.motivation = j.at("motivation").get<std::string>();
    c.approach = j.at("approach").get<std::string>();
    if (j.contains("novelty_score") && !j["novelty_score"].is_null())
        c.novelty_score = j["novelty_score"].get<double>();
    for (const auto& m : j.value("matches", json::array())) {
        LiteratureMatch lm;
        lm.title = m.at("title").get<std::string>();
        if (m.contains("year") && !m["year"].is_null())
            lm.year = m["year"].get<int>();
        lm.similarity = m.at("similarity").get<double>();
        c.matches.push_back(lm);
    }
    return c;
}

json ParseReport::to_json() const
{
    return {{"parsed", parsed}, {"dropped", dropped}, {"problems", problems}};
}

namespace {

enum class Field { question, gap, motivation, approach, none };

// Strips list markers and emphasis around a label line; returns the field
// and the value as a view into `line`.
Field classify(std::string_view line, std::string_view& value)
{
    auto s = line;
    auto skip = [&](std::string_view chars) {
        while (!s.empty() && chars.find(s.front()) != std::string_view::npos)
            s.remove_prefix(1);
    };
    skip(" \t");
    if (s.starts_with("- ") || s.starts_with("* "))
        s.remove_prefix(2);
    skip(" \t*_");
    static const std::pair<std::string_view, Field> labels[] = {
        {"research question", Field::question}, {"question", Field::question},
        {"gap", Field::gap},                    {"motivation", Field::motivation},
        {"approach", Field::approach},
    };
    for (const auto& [label, field] : labels) {
        if (!starts_with_ci(s, label))
            continue;
        auto rest = s.substr(label.size());
        while (!rest.empty() && (rest.front() == '*' || rest.front() == '_'))
            rest.remove_prefix(1);
        if (rest.empty() || rest.front() != ':')
            continue;
        rest.remove_prefix(1);
        while (!rest.empty() && (rest.front() == '*' || rest.front() == '_' || rest.front() == ' ' || rest.front() == '\t'))
            rest.remove_prefix(1);
        while (!rest.empty() && (rest.back() == '*' || rest.back() == '_' || rest.back() == ' ' ||
                                 rest.back() == '\t' || rest.back() == '\r'))
            rest.remove_suffix(1);
        value = rest;
        return field;
    }
    return Field::none;
}

struct Draft {
    std::array<std::string, 4> fields;
    bool open = false;
};

} // namespace

ParsedIdeas parse_ideas(const std::string& text)
{
    ParsedIdeas out;
    Draft draft;
    std::size_t seen = 0;
    static const char* names[] = {"Question", "Gap", "Motivation", "Approach"};

    auto finish = [&] {
        if (!draft.open)
            return;
        std::vector<std::string> missing;
        for (std::size_t i = 0; i < 4; ++i)
            if (draft.fields[i].empty())
                missing.push_back(names[i]);
        if (missing.empty()) {
            IdeaCard c;
            c.research_question = draft.fields[0];
            c.gap = draft.fields[1];
            c.motivation = draft.fields[2];
            c.approach = draft.fields[3];
            out.cards.push_back(std::move(c));
            ++out.report.parsed;
        } else {
            std::string msg = "idea " + std::to_string(seen) + ": missing";
            for (const auto& m : missing)
                msg += " " + m + ":";
            out.report.problems.push_back(msg);
            ++out.report.dropped;
        }
        draft = {};
    };

    for (const auto& line : split(text, '\n')) {
        std::string_view value;
        const auto field = classify(line, value);
        if (field == Field::none)
            continue;
        const auto idx = static_cast<std::size_t>(field);
        if (field == Field::question || !draft.open || !draft.fields[idx].empty()) {
            finish();
            draft.open = true;
            ++seen;
        }
        draft.fields[idx] = std::string(value);
    }
    finish();
    return out;
}

std::string default_ideation_topic()
{
    return "advancements in EEG-based motor imagery classification for brain-computer interfaces using the BCI "
           "Competition IV 2a dataset";
}

std::string ideation_prompt(std::size_t n, const std::string& topic)
{
    return "Propose " + std::to_string(n) + " research ideas on " + topic +
           ". For each idea write exactly four lines labeled 'Question:', 'Gap:', 'Motivation:' and "
           "'Approach:', and separate ideas with a blank line.";
}

GeneratedIdeas generate_ideas(std::size_t n, const std::string& topic, ChatSession& session)
{
    if (n == 0)
        throw PreconditionError("number of ideas must be at least 1");
    GeneratedIdeas out;
    out.raw = session.send(ideation_prompt(n, topic)).content;
    auto parsed = parse_ideas(out.raw);
    out.report = parsed.report;
    if (parsed.cards.empty())
        throw GenerationError("no parseable ideas in provider reply:\n" + out.raw);
    if (parsed.cards.size() > n)
        parsed.cards.resize(n);
    for (std::size_t i = 0; i < parsed.cards.size(); ++i)
        parsed.cards[i].id = "idea-" + std::to_string(i + 1);
    out.cards = std::move(parsed.cards);
    return out;
}

MockLiteratureClient MockLiteratureClient::from_file(const std::filesystem::path& path)
{
    std::vector<LiteratureRecord> corpus;
    try {
        for (const auto& r : json::parse(read_file(path))) {
            LiteratureRecord rec;
            rec.title = r.at("title").get<std::string>();
            rec.abstract = r.value("abstract", "");
            if (r.contains("year") && !r["year"].is_null())
                rec.year = r["year"].get<int>();
            corpus.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return MockLiteratureClient(std::move(corpus));
}

std::vector<LiteratureRecord> MockLiteratureClient::search(const std::string&, std::size_t limit)
{
    if (failing_)
        throw ProviderError("mock literature client: injected failure");
    std::vector<LiteratureRecord> out(corpus_.begin(), corpus_.begin() + static_cast<std::ptrdiff_t>(
                                                                            std::min(limit, corpus_.size())));
    return out;
}

NoveltyResult novelty_check(IdeaCard& card, LiteratureClient& client, std::size_t limit)
{
    NoveltyResult out;
    std::vector<LiteratureRecord> records;
    try {
        records = client.search(card.research_question, limit);
    } catch (const std::exception& e) {
        out.warning = std::string("literature search failed: ") + e.what();
        card.novelty_score.reset();
        card.matches.clear();
        return out;
    }
    const auto q = word_set(card.research_question);
    double max_sim = 0.0;
    for (const auto& r : records) {
        const double s = jaccard(q, word_set(r.title + " " + r.abstract));
        out.matches.push_back({r.title, r.year, s});
        max_sim = std::max(max_sim, s);
    }
    std::stable_sort(out.matches.begin(), out.matches.end(),
                     [](const LiteratureMatch& a, const LiteratureMatch& b) { return a.similarity > b.similarity; });
    out.score = 1.0 - max_sim;
    card.novelty_score = out.score;
    card.matches = out.matches;
    return out;
}

void append_ideas(const std::filesystem::path& path, const std::vector<IdeaCard>& cards)
{
    for (const auto& c : cards)
        append_line(path, c.to_json().dump());
}

std::vector<IdeaCard> read_ideas(const std::filesystem::path& path)
{
    std::vector<IdeaCard> out;
    for (const auto& line : split(read_file(path), '\n'))
        if (!trim(line).empty())
            out.push_back(IdeaCard::from_json(json::parse(line)));
    return out;
}

} // namespace chatbci
