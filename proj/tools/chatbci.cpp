// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

// chatbci command-line front end.

#include <chatbci/data_store.hpp>
#include <chatbci/demo.hpp>
#include <chatbci/error.hpp>
#include <chatbci/figures.hpp>
#include <chatbci/ideation.hpp>
#include <chatbci/knowledge_base.hpp>
#include <chatbci/llm_bridge.hpp>
#include <chatbci/service.hpp>
#include <chatbci/synthetic.hpp>
#include <chatbci/util.hpp>
#include <chatbci/workspace.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using namespace chatbci;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::string data;
    std::string out;
};

// One line, machine-parseable: "error: <Kind>: <message>".
[[noreturn]] void fail(const std::string& kind, std::string message, int code = 1)
{
    for (auto& c : message)
        if (c == '\n' || c == '\r')
            c = ' ';
    std::fprintf(stderr, "error: %s: %s\n", kind.c_str(), message.c_str());
    std::exit(code);
}

ServiceConfig service_config(const Globals& g)
{
    ServiceConfig c = g.config.empty() ? ServiceConfig{} : ServiceConfig::load(g.config);
    if (!g.data.empty())
        c.data_root = g.data;
    c.out_root = g.out;
    return c;
}

void write_output(const Globals& g, const std::string& name, const std::string& contents)
{
    fs::create_directories(g.out);
    write_file_atomic(fs::path(g.out) / name, contents);
}

json analysis_request(const std::string& kind, const std::vector<std::string>& subjects, const std::string& session,
                      const std::vector<std::string>& filters, bool no_car, const std::vector<double>& window,
                      const std::vector<double>& baseline)
{
    json req{{"kind", kind}, {"session", session}, {"car", !no_car}};
    if (!subjects.empty())
        req["subjects"] = subjects;
    if (!filters.empty())
        req["filters"] = filters;
    if (!window.empty()) {
        if (window.size() != 2)
            throw ConfigError("window: expected two values, e.g. --window -2,2");
        req["window_s"] = window;
    }
    if (!baseline.empty()) {
        if (baseline.size() != 2)
            throw ConfigError("baseline: expected two values");
        req["baseline_s"] = baseline;
    }
    return req;
}

int cmd_validate(const Globals& g, const std::string& dataset)
{
    json out{{"data_root", dataset}, {"recordings", json::array()}};
    bool pass = true;
    const auto dirs = list_recordings(dataset);
    if (dirs.empty())
        throw PreconditionError("no recordings under " + dataset);
    std::vector<std::string> failing;
    for (const auto& dir : dirs) {
        const auto report = validate(load_recording(dir));
        pass = pass && report.pass;
        if (!report.pass)
            failing.push_back(dir.filename().string());
        std::cout << dir.filename().string() << ": " << (report.pass ? "pass" : "FAIL") << "\n";
        out["recordings"].push_back(report.to_json());
    }
    out["pass"] = pass;
    write_output(g, "validate.json", out.dump(2) + "\n");
    if (!pass) {
        std::string names;
        for (const auto& n : failing)
            names += (names.empty() ? "" : ",") + n;
        fail("IntegrityError", "validation failed for " + names);
    }
    std::cout << "report: pass\n";
    return 0;
}

int cmd_analysis(const Globals& g, const json& request, bool figure, bool zoom)
{
    auto cfg = service_config(g);
    Workspace ws({cfg.data_root, cfg.out_root, 1});
    const auto doc = ws.analyze(request);
    std::cout << "report " << doc.at("report_id").get<std::string>() << " (" << doc.at("kind").get<std::string>()
              << ", " << doc.at("n_trials") << " trials) -> "
              << (cfg.out_root / "analyses" / (doc.at("report_id").get<std::string>() + ".json")).string() << "\n";
    if (figure && doc.at("kind") == "erp") {
        const auto fig = ws.make_figure({{"type", "erp"}, {"erp_result_id", doc.at("report_id")}, {"zoom", zoom}});
        std::cout << "figure " << fig.figure_id << " -> "
                  << (cfg.out_root / "figures" / (fig.figure_id + ".png")).string() << "\n";
    }
    return 0;
}

int cmd_train(const Globals& g, const json& body)
{
    auto cfg = service_config(g);
    const auto request = parse_run_request(body);
    Workspace ws({cfg.data_root, cfg.out_root, 1});
    const auto id = ws.start_run(request);
    std::cout << "run " << id << " started for " << request.subject_id << "\n";
    const auto status = ws.wait_run(id);
    for (const auto& m : status.at("metrics"))
        std::cout << m.dump() << "\n";
    std::cout << "run " << id << " " << status.at("status").get<std::string>();
    if (status.at("eval_accuracy").is_number())
        std::cout << " eval_accuracy=" << status.at("eval_accuracy").get<double>();
    std::cout << " dir=" << (cfg.out_root / "runs" / id).string() << "\n";
    if (status.at("status") != "finished")
        fail("TrainingError", "run " + id + " " + status.at("status").get<std::string>() + ": " +
                                  status.value("error", std::string("no detail")));
    return 0;
}

int cmd_ideate(const Globals& g, std::size_t n, bool offline, const std::string& topic, const std::string& corpus)
{
    auto cfg = service_config(g);
    std::unique_ptr<Provider> provider;
    if (offline)
        provider = std::make_unique<MockProvider>(MockProvider::with_defaults());
    else
        provider = make_provider(cfg.llm);
    SessionOptions opts;
    opts.session_id = "ideate";
    opts.clock = offline ? sequence_clock() : system_clock();
    ChatSession session(*provider, nullptr, opts);
    auto generated = generate_ideas(n, topic.empty() ? default_ideation_topic() : topic, session);

    std::unique_ptr<LiteratureClient> literature;
    if (!corpus.empty())
        literature = std::make_unique<MockLiteratureClient>(MockLiteratureClient::from_file(corpus));
    else if (!offline)
        literature = std::make_unique<HttpLiteratureClient>();
    for (auto& card : generated.cards) {
        if (literature) {
            const auto r = novelty_check(card, *literature);
            if (!r.warning.empty())
                std::cerr << "warning: " << card.id << ": " << r.warning << "\n";
        }
        std::cout << card.id << ": " << card.research_question;
        if (card.novelty_score)
            std::cout << " [novelty " << *card.novelty_score << "]";
        std::cout << "\n";
    }
    for (const auto& p : generated.report.problems)
        std::cerr << "warning: " << p << "\n";
    fs::create_directories(g.out);
    const auto path = fs::path(g.out) / "ideas.jsonl";
    append_ideas(path, generated.cards);
    std::cout << generated.cards.size() << " ideas -> " << path.string() << "\n";
    return 0;
}

int cmd_summarize(const Globals& g, const std::string& dir, int level)
{
    const auto text = summarize_directory(dir, level);
    std::cout << text;
    write_output(g, "summary_level" + std::to_string(level) + ".txt", text);
    return 0;
}

Service* g_service = nullptr;

int cmd_serve(const Globals& g, const std::string& host, int port)
{
    Service service(service_config(g));
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service)
            g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service)
            g_service->stop();
    });
    std::cerr << "serving on http://" << host << ":" << port << "\n";
    const bool ok = service.serve(host, port);
    g_service = nullptr;
    if (!ok)
        fail("IOError", "cannot listen on " + host + ":" + std::to_string(port));
    return 0;
}

int cmd_chat_script(const Globals& g, const std::string& kb)
{
    auto cfg = service_config(g);
    Workspace ws({cfg.data_root, cfg.out_root, 1});
    std::shared_ptr<const KnowledgeStore> knowledge;
    if (!kb.empty())
        knowledge = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(kb));
    const auto result = run_scripted_session(ws, knowledge, cfg.out_root / "sessions" / "demo.jsonl");
    for (const auto& rec : result.transcript)
        std::cout << "[" << rec.value("role", "") << "/" << rec.value("phase", "") << "] " << rec.value("content", "")
                  << "\n";
    write_output(g, "chat_script.json", result.to_json().dump(2) + "\n");
    std::cout << "digest " << to_hex(result.digest) << "\n";
    if (!result.complete)
        fail("StateError", "scripted session did not complete");
    return 0;
}

int cmd_chat_interactive(const Globals& g, const std::string& kb)
{
    auto cfg = service_config(g);
    auto provider = make_provider(cfg.llm);
    Workspace ws({cfg.data_root, cfg.out_root, cfg.max_parallel_runs});
    SessionOptions opts;
    opts.session_id = "terminal";
    fs::create_directories(cfg.out_root / "sessions");
    opts.transcript_path = cfg.out_root / "sessions" / "terminal.jsonl";
    opts.policy = cfg.autonomy;
    if (!kb.empty())
        opts.knowledge = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(kb));
    else if (!cfg.kb_dir.empty())
        opts.knowledge = std::make_shared<const KnowledgeStore>(KnowledgeStore::load(cfg.kb_dir));
    ChatSession session(*provider, &ws, opts);
    ws.on_run_finished([&](const json& s) {
        session.notify("run " + s.value("run_id", "") + " " + s.value("status", ""));
    });
    std::cout << "commands: /phase NAME, /autonomy PHASE LEVEL, /approve ID, /reject ID REASON, /state, /quit\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        try {
            if (line == "/quit")
                break;
            if (line.rfind("/phase ", 0) == 0) {
                session.set_phase(parse_phase(trim(line.substr(7))));
            } else if (line.rfind("/autonomy ", 0) == 0) {
                const auto parts = split(trim(line.substr(10)), ' ');
                if (parts.size() != 2)
                    throw ConfigError("usage: /autonomy PHASE LEVEL");
                session.set_autonomy(parse_phase(parts[0]), std::stoi(parts[1]));
            } else if (line.rfind("/approve ", 0) == 0) {
                std::cout << session.approve(trim(line.substr(9))).to_json().dump() << "\n";
            } else if (line.rfind("/reject ", 0) == 0) {
                const auto rest = trim(line.substr(8));
                const auto sp = rest.find(' ');
                std::cout << session.reject(rest.substr(0, sp), sp == std::string::npos ? "" : rest.substr(sp + 1))
                                 .to_json()
                                 .dump()
                          << "\n";
            } else if (line == "/state") {
                std::cout << session.state().to_json().dump(2) << "\n";
            } else if (!trim(line).empty()) {
                const auto r = session.post_message(line);
                std::cout << r.reply.content << "\n";
                for (const auto& a : r.actions)
                    std::cout << "  action " << a.action_id << " " << to_string(a.kind) << " -> " << to_string(a.state)
                              << "\n";
            }
        } catch (const Error& e) {
            std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: InputError: " << e.what() << "\n";
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ChatBCI: EEG analysis, decoding and a human-AI research workspace"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "chatbci.json configuration file");
    app.add_option("--data", g.data, "Converted dataset root (overrides the config)");
    app.add_option("--out", g.out, "Output directory for every artifact (default: config out_root or ./out)");
    app.fallthrough();

    std::string dataset;
    auto* validate_cmd = app.add_subcommand("validate", "Validate every recording under a dataset directory");
    validate_cmd->add_option("dataset-dir", dataset)->required();

    std::vector<std::string> subjects, filters;
    std::string session = "train";
    bool no_car = false, figure = false, zoom = false;
    std::vector<double> window, baseline;
    double segment_s = 1.0, overlap = 0.5, outlier_k = 6.0;
    std::vector<CLI::App*> analysis_cmds;
    for (const auto& [name, help] : {std::pair{"erp", "Class-wise event-related potentials"},
                                     std::pair{"psd", "Welch power spectral density per class"},
                                     std::pair{"stats", "Per-class channel statistics and outliers"}}) {
        auto* c = app.add_subcommand(name, help);
        c->add_option("--subjects", subjects, "Subjects (A01 or 1), comma separated; default all")->delimiter(',');
        c->add_option("--filters", filters, "Filter chain, e.g. hp:4,lp:40 or bp:8:30")->delimiter(',');
        c->add_option("--session", session, "train, eval or both")->capture_default_str();
        c->add_flag("--no-car", no_car, "Skip the common average reference");
        c->add_option("--window", window, "Epoch window in seconds around the cue, e.g. -2,2")->delimiter(',');
        c->add_option("--baseline", baseline, "Baseline window in seconds")->delimiter(',');
        analysis_cmds.push_back(c);
    }
    analysis_cmds[0]->add_flag("--figure", figure, "Render the ERP figure");
    analysis_cmds[0]->add_flag("--zoom", zoom, "Zoom the figure to 1500-3500 ms");
    analysis_cmds[1]->add_option("--segment", segment_s, "Welch segment length (s)")->capture_default_str();
    analysis_cmds[1]->add_option("--overlap", overlap, "Welch overlap fraction")->capture_default_str();
    analysis_cmds[2]->add_option("--outlier-k", outlier_k, "Robust outlier threshold")->capture_default_str();

    std::string subject, preset = "default";
    bool include_eog = false;
    std::optional<std::size_t> max_epochs;
    std::uint64_t seed = 0;
    auto* train_cmd = app.add_subcommand("train", "Train the decoder on one subject (train session → eval session)");
    train_cmd->add_option("--subject", subject, "Subject id (A01 or 1)")->required();
    train_cmd->add_flag("--include-eog", include_eog, "Feed EOG channels to the decoder");
    train_cmd->add_option("--preset", preset, "default or tiny")->capture_default_str();
    train_cmd->add_option("--max-epochs", max_epochs, "Override the preset's epoch budget");
    train_cmd->add_option("--seed", seed, "Training seed")->capture_default_str();

    std::size_t n_ideas = 5;
    bool offline = false;
    std::string topic, corpus;
    auto* ideate_cmd = app.add_subcommand("ideate", "Generate research idea cards with novelty scores");
    ideate_cmd->add_option("--n", n_ideas, "Number of ideas")->capture_default_str();
    ideate_cmd->add_flag("--offline", offline, "Use the mock provider and no network");
    ideate_cmd->add_option("--topic", topic, "Topic sent to the provider");
    ideate_cmd->add_option("--corpus", corpus, "Literature fixture (JSON array) for novelty scoring");

    std::string summarize_dir;
    int level = 0;
    auto* summarize_cmd = app.add_subcommand("summarize", "Hierarchical summary of a directory tree");
    summarize_cmd->add_option("dir", summarize_dir)->required();
    summarize_cmd->add_option("--level", level, "0, 1 or 2")->check(CLI::Range(0, 2))->capture_default_str();

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Run the REST service");
    serve_cmd->add_option("--port", port)->capture_default_str();
    serve_cmd->add_option("--host", host)->capture_default_str();

    bool script = false;
    std::string kb;
    auto* chat_cmd = app.add_subcommand("chat", "Terminal chat session");
    chat_cmd->add_flag("--script", script, "Play the built-in mock session end to end");
    chat_cmd->add_option("--kb", kb, "Knowledge document directory");

    int n_subjects = 1, trials_per_class = 72;
    std::uint64_t synth_seed = 1;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset in the converted layout");
    synth_cmd->add_option("--subjects", n_subjects)->capture_default_str();
    synth_cmd->add_option("--trials-per-class", trials_per_class)->capture_default_str();
    synth_cmd->add_option("--seed", synth_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("UsageError", e.what(), 2);
    }

    try {
        if (g.out.empty())
            g.out = g.config.empty() ? "out" : ServiceConfig::load(g.config).out_root.string();
        if (validate_cmd->parsed())
            return cmd_validate(g, dataset);
        for (auto* c : analysis_cmds)
            if (c->parsed()) {
                auto req = analysis_request(c->get_name(), subjects, session, filters, no_car, window, baseline);
                if (c->get_name() == "psd") {
                    req["segment_s"] = segment_s;
                    req["overlap"] = overlap;
                }
                if (c->get_name() == "stats")
                    req["outlier_k"] = outlier_k;
                return cmd_analysis(g, req, figure, zoom);
            }
        if (train_cmd->parsed()) {
            json body{{"subject_id", subject}, {"preset", preset}, {"include_eog", include_eog}, {"seed", seed}};
            if (max_epochs)
                body["max_epochs"] = *max_epochs;
            return cmd_train(g, body);
        }
        if (ideate_cmd->parsed())
            return cmd_ideate(g, n_ideas, offline, topic, corpus);
        if (summarize_cmd->parsed())
            return cmd_summarize(g, summarize_dir, level);
        if (serve_cmd->parsed())
            return cmd_serve(g, host, port);
        if (chat_cmd->parsed())
            return script ? cmd_chat_script(g, kb) : cmd_chat_interactive(g, kb);
        if (synth_cmd->parsed()) {
            const fs::path root = g.data.empty() ? fs::path(g.out) / "data" : fs::path(g.data);
            write_synthetic_dataset(root, n_subjects, trials_per_class, synth_seed);
            std::cout << "wrote " << n_subjects << " subject(s) to " << root.string() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        fail(e.kind(), e.what());
    } catch (const std::exception& e) {
        fail("InternalError", e.what());
    }
    return 0;
}
