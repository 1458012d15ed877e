// flowgrade command-line interface: evaluate answer sheets, inspect diagram
// reconstruction, grade ad-hoc text pairs, tally expectation bands, and run
// the HTTP service.

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "flowgrade/flowgrade.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitRuntimeError = 2;

flowgrade::Config load_config_or_default(const std::string& path) {
    if (path.empty()) {
        flowgrade::Config cfg;
        cfg.backend = flowgrade::backend_config_from_env();
        return cfg;
    }
    return flowgrade::load_config(path);
}

std::unique_ptr<flowgrade::ChatBackend> make_backend(const flowgrade::Config& cfg) {
    if (cfg.backend_kind == "http")
        return std::make_unique<flowgrade::HttpBackend>(cfg.backend);
    return std::make_unique<flowgrade::MockBackend>(cfg.synonyms);
}

int run_evaluate(const std::string& detections_path, const std::string& key_path,
                 const std::string& config_path, const std::string& backend_override,
                 const std::string& out_dir) {
    flowgrade::Config cfg = load_config_or_default(config_path);
    if (!backend_override.empty()) cfg.backend_kind = backend_override;

    const std::string document = flowgrade::read_file(detections_path);
    const flowgrade::AnswerKey key =
        flowgrade::load_answer_key(key_path, cfg.ingest.graph);

    auto backend = make_backend(cfg);
    flowgrade::Gateway gateway(cfg.backend, cfg.prompts);
    const std::string sheet_id = std::filesystem::path(detections_path).stem().string();

    const flowgrade::Report report =
        flowgrade::evaluate_sheet(document, key, cfg, *backend, gateway, sheet_id);
    std::cout << flowgrade::to_json(report).dump(2) << "\n";
    if (!out_dir.empty()) flowgrade::persist_report(report, out_dir);
    return kExitOk;
}

int run_parse_diagram(const std::string& detections_path, const std::string& block_id,
                      const std::string& config_path) {
    const flowgrade::Config cfg = load_config_or_default(config_path);
    flowgrade::Sheet sheet = flowgrade::parse_detections(flowgrade::read_file(detections_path));
    flowgrade::classify_blocks(sheet.blocks, cfg.ingest.density_threshold);

    const flowgrade::Block* chosen = nullptr;
    for (const auto& b : sheet.blocks) {
        if (!block_id.empty() ? b.id == block_id : b.kind == flowgrade::BlockKind::Diagram) {
            chosen = &b;
            break;
        }
    }
    if (!chosen) {
        std::cerr << (block_id.empty() ? "no diagram block in document"
                                       : "no block with id '" + block_id + "'")
                  << "\n";
        return kExitInputError;
    }
    flowgrade::FlowGraph graph =
        flowgrade::build_graph(chosen->primitives, chosen->words, cfg.ingest.graph);
    std::vector<flowgrade::Diagnostic> warnings = graph.warnings;
    std::cout << flowgrade::serialize(graph, &warnings);
    for (const auto& w : warnings) std::cerr << w.code << ": " << w.message << "\n";
    return kExitOk;
}

int run_grade_text(const std::string& student_path, const std::string& model_path,
                   double max_marks, const std::string& config_path,
                   const std::string& backend_override) {
    flowgrade::Config cfg = load_config_or_default(config_path);
    if (!backend_override.empty()) cfg.backend_kind = backend_override;

    flowgrade::GradingRequest req;
    req.question_id = "adhoc";
    req.kind = flowgrade::GradingKind::Text;
    req.student_payload = flowgrade::read_file(student_path);
    req.model_payload = flowgrade::read_file(model_path);
    req.max_marks = max_marks;

    auto backend = make_backend(cfg);
    flowgrade::Gateway gateway(cfg.backend, cfg.prompts);
    const flowgrade::GradingVerdict v = gateway.grade(req, *backend);
    std::cout << flowgrade::to_json(v).dump(2) << "\n";
    return kExitOk;
}

int run_report(const std::string& results_dir, const std::string& expected_csv, double band) {
    const auto expected = flowgrade::load_expected_csv(expected_csv);
    const auto tally = flowgrade::expectation_tally(results_dir, expected, band);
    for (const auto& row : tally.rows) {
        std::cout << row.sheet_id << " " << row.question_id << " score=" << row.combined_score
                  << " expected=" << row.expected << " within=" << (row.within ? "yes" : "no")
                  << "\n";
    }
    if (tally.skipped > 0)
        std::cout << "(no reference mark for " << tally.skipped << " question result(s))\n";
    std::cout << "within expectations: " << tally.within_count << "/" << tally.total_count
              << " (band " << band << ")\n";
    return kExitOk;
}

int run_serve(int port, const std::string& config_path, const std::string& backend_override) {
    flowgrade::Config cfg = load_config_or_default(config_path);
    if (!backend_override.empty()) cfg.backend_kind = backend_override;
    flowgrade::Service service(cfg);
    std::cout << "flowgrade service listening on port " << port << "\n";
    if (!service.listen("0.0.0.0", port)) {
        std::cerr << "failed to bind port " << port << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowgrade: grade multimodal answer sheets against a model answer key"};
    app.require_subcommand(1);
    app.set_version_flag("--version", flowgrade::kVersion);

    std::string detections_path, key_path, config_path, backend_override, out_dir;
    std::string block_id, student_path, model_path, results_dir, expected_csv;
    double max_marks = 0.0;
    double band = 0.5;
    int port = 8080;

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a sheet against an answer key");
    evaluate->add_option("--detections", detections_path, "Detections JSON file")->required();
    evaluate->add_option("--key", key_path, "Answer key JSON file")->required();
    evaluate->add_option("--config", config_path, "Config file");
    evaluate->add_option("--backend", backend_override, "Backend override")
        ->check(CLI::IsMember({"mock", "http"}));
    evaluate->add_option("--out", out_dir, "Directory for the report and run log");

    auto* parse_diagram =
        app.add_subcommand("parse-diagram", "Print a diagram block's canonical text");
    parse_diagram->add_option("--detections", detections_path, "Detections JSON file")->required();
    parse_diagram->add_option("--block", block_id, "Block id (default: first diagram block)");
    parse_diagram->add_option("--config", config_path, "Config file");

    auto* grade_text = app.add_subcommand("grade-text", "Grade one text answer file");
    grade_text->add_option("--student", student_path, "Student answer text file")->required();
    grade_text->add_option("--model", model_path, "Model answer text file")->required();
    grade_text->add_option("--max", max_marks, "Maximum marks")
        ->required()
        ->check(CLI::PositiveNumber);
    grade_text->add_option("--config", config_path, "Config file");
    grade_text->add_option("--backend", backend_override, "Backend override")
        ->check(CLI::IsMember({"mock", "http"}));

    auto* report = app.add_subcommand("report", "Expectation tally over saved reports");
    report->add_option("--results", results_dir, "Directory of *.report.json files")->required();
    report->add_option("--expected", expected_csv, "CSV of question_id,expected rows")->required();
    report->add_option("--band", band, "Expectation band in marks")->check(CLI::NonNegativeNumber);

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--port", port, "Port to listen on")->required();
    serve->add_option("--config", config_path, "Config file");
    serve->add_option("--backend", backend_override, "Backend override")
        ->check(CLI::IsMember({"mock", "http"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInputError;
    }

    try {
        if (app.got_subcommand(evaluate))
            return run_evaluate(detections_path, key_path, config_path, backend_override, out_dir);
        if (app.got_subcommand(parse_diagram))
            return run_parse_diagram(detections_path, block_id, config_path);
        if (app.got_subcommand(grade_text))
            return run_grade_text(student_path, model_path, max_marks, config_path,
                                  backend_override);
        if (app.got_subcommand(report)) return run_report(results_dir, expected_csv, band);
        if (app.got_subcommand(serve)) return run_serve(port, config_path, backend_override);
    } catch (const flowgrade::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return kExitInputError;
    } catch (const flowgrade::VersionError& e) {
        std::cerr << e.what() << "\n";
        return kExitInputError;
    } catch (const flowgrade::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitInputError;
    } catch (const flowgrade::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitInputError;
    } catch (const flowgrade::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitOk;
}
