#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flowgrade/answer_key.hpp"
#include "flowgrade/canonical.hpp"
#include "flowgrade/config.hpp"
#include "flowgrade/detections.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/ingest.hpp"
#include "flowgrade/llm_gateway.hpp"
#include "flowgrade/report.hpp"
#include "flowgrade/scoring.hpp"

namespace flowgrade {

/// Combines per-modality verdicts into one question score. With both verdicts
/// the normalized scores blend by the modality weights; a single verdict is
/// rescaled to max_marks. Result rounds to the marking step.
inline double aggregate(const std::optional<GradingVerdict>& text_v,
                        const std::optional<GradingVerdict>& diag_v,
                        const ModalityWeights& weights, double max_marks,
                        double rounding_step = 0.5) {
    if (!text_v && !diag_v) throw NoVerdicts();
    double fraction = 0.0;
    if (text_v && diag_v) {
        const double ft = text_v->max > 0 ? text_v->score / text_v->max : 0.0;
        const double fd = diag_v->max > 0 ? diag_v->score / diag_v->max : 0.0;
        fraction = weights.text * ft + weights.diagram * fd;
    } else {
        const GradingVerdict& v = text_v ? *text_v : *diag_v;
        fraction = v.max > 0 ? v.score / v.max : 0.0;
    }
    return round_to_step(max_marks * fraction, rounding_step);
}

/// |combined - expected| <= band, the "marks as per expectations" check.
inline bool check_expectation(const QuestionResult& result, double expected, double band = 0.5) {
    return std::abs(result.combined_score - expected) <= band;
}

namespace detail {

inline std::string joined_text(const QuestionBundle& bundle) {
    std::string out;
    for (const auto& line : bundle.answer_text) {
        if (!out.empty()) out += '\n';
        out += line.text;
    }
    return out;
}

}  // namespace detail

/// Runs the full pipeline over one sheet: parse detections, classify blocks,
/// segment into question bundles, grade each key question's text and diagram
/// through the gateway, aggregate, and assemble the report. Per-question
/// grading failures score 0 and flag the question; they never abort the
/// sheet.
inline Report evaluate_sheet(const std::string& detections_document, const AnswerKey& key,
                             const Config& config, ChatBackend& backend, Gateway& gateway,
                             const std::string& sheet_id = "sheet") {
    Sheet sheet = parse_detections(detections_document);
    classify_blocks(sheet.blocks, config.ingest.density_threshold);
    sort_reading_order(sheet.blocks);

    IngestConfig ingest_cfg = config.ingest;
    if (ingest_cfg.anchor.kind == AnchorPolicy::Kind::Manifest)
        ingest_cfg.anchor.regions = key.regions();
    IngestResult ingest = map_to_questions(sheet.blocks, ingest_cfg, Source::Student);

    Report report;
    report.sheet_id = sheet_id;
    report.meta.backend = backend.name();
    report.meta.config_hash = config_hash(config);
    report.meta.timestamp = iso8601_utc_now();
    report.meta.sheet_warnings = ingest.warnings;

    std::vector<std::string> question_ids;
    for (const auto& q : key.questions) question_ids.push_back(q.question_id);
    std::sort(question_ids.begin(), question_ids.end(), natural_less);

    for (const auto& qid : question_ids) {
        const QuestionSpec& spec = *key.find(qid);
        QuestionResult result;
        result.question_id = qid;
        result.max_marks = spec.max_marks;

        if (auto it = ingest.question_warnings.find(qid); it != ingest.question_warnings.end())
            result.warnings.insert(result.warnings.end(), it->second.begin(), it->second.end());

        const auto bundle_it = ingest.bundles.find(qid);
        const QuestionBundle* bundle =
            bundle_it != ingest.bundles.end() ? &bundle_it->second : nullptr;
        if (!bundle || (bundle->answer_text.empty() && bundle->diagrams.empty())) {
            result.warnings.push_back(
                {"MissingAnswer", "no content found for question " + qid});
            report.questions.push_back(std::move(result));
            continue;
        }

        auto grade_modality = [&](GradingKind kind, const std::string& student_payload,
                                  const std::string& model_payload) -> std::optional<GradingVerdict> {
            GradingRequest req;
            req.question_id = qid;
            req.kind = kind;
            req.student_payload = student_payload;
            req.model_payload = model_payload;
            req.max_marks = spec.max_marks;
            req.question_text = spec.question_text;
            try {
                return gateway.grade(req, backend);
            } catch (const UnparsableVerdict& e) {
                result.warnings.push_back(
                    {"FallbackDeterministic",
                     std::string("grader reply unusable (") + e.what() +
                         "); deterministic scorer used instead"});
                if (kind == GradingKind::Text) {
                    return deterministic_text_score(student_payload, model_payload, spec.keywords,
                                                    spec.max_marks);
                }
                const SimilarityScore sim =
                    graph_similarity(parse_canonical(student_payload),
                                     parse_canonical(model_payload), config.graph_weights,
                                     config.synonyms);
                GradingVerdict v;
                v.max = spec.max_marks;
                v.score = round_to_step(spec.max_marks * sim.value, config.aggregate.rounding_step);
                std::ostringstream why;
                why << "deterministic graph similarity " << sim.value;
                v.justification = why.str();
                v.backend = "deterministic";
                v.approximate = sim.approximate;
                return v;
            } catch (const Error& e) {
                result.warnings.push_back(
                    {"GradingFailed", std::string("grading failed: ") + e.what()});
                return std::nullopt;
            }
        };

        std::optional<GradingVerdict> text_verdict;
        if (!spec.model_text.empty()) {
            const std::string student_text = detail::joined_text(*bundle);
            if (student_text.empty())
                result.warnings.push_back(
                    {"MissingText", "question expects a text answer but none was found"});
            text_verdict = grade_modality(GradingKind::Text, student_text, spec.model_text);
        }

        std::optional<GradingVerdict> diagram_verdict;
        if (spec.model_graph) {
            if (bundle->diagrams.empty()) {
                result.warnings.push_back(
                    {"MissingDiagram", "question expects a diagram but none was found"});
            } else {
                if (bundle->diagrams.size() > 1)
                    result.warnings.push_back(
                        {"ExtraDiagram",
                         "question has " + std::to_string(bundle->diagrams.size()) +
                             " diagrams; grading the first"});
                const std::string student_canon = serialize(bundle->diagrams.front());
                const std::string model_canon = serialize(*spec.model_graph);
                diagram_verdict = grade_modality(GradingKind::Diagram, student_canon, model_canon);
            }
        } else if (!bundle->diagrams.empty()) {
            result.warnings.push_back(
                {"UnexpectedDiagram", "student drew a diagram but the key has none; ignored"});
        }

        result.text_verdict = text_verdict;
        result.diagram_verdict = diagram_verdict;
        if (text_verdict || diagram_verdict) {
            const ModalityWeights weights =
                spec.weights ? *spec.weights
                             : ModalityWeights{config.aggregate.text_weight,
                                               config.aggregate.diagram_weight};
            result.combined_score = aggregate(text_verdict, diagram_verdict, weights,
                                              spec.max_marks, config.aggregate.rounding_step);
        } else {
            result.combined_score = 0.0;
        }
        report.questions.push_back(std::move(result));
    }

    // Student content that matches no key question is reported, not graded.
    for (const auto& [qid, bundle] : ingest.bundles) {
        if (qid == kUnassignedQuestion) {
            report.meta.sheet_warnings.push_back(
                {"UnassignedContent", "content found before any question anchor"});
            continue;
        }
        if (!key.find(qid))
            report.meta.sheet_warnings.push_back(
                {"UnknownQuestion", "sheet contains content for '" + qid +
                                        "' which is not in the answer key"});
    }
    return report;
}

/// Persists one report as <out_dir>/<sheet_id>.report.json and appends a
/// one-line summary to <out_dir>/runs.jsonl.
inline void persist_report(const Report& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path report_path = fs::path(out_dir) / (report.sheet_id + ".report.json");
    {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + report_path.string() + "'");
        out << to_json(report).dump(2) << "\n";
    }
    const nlohmann::json line = {{"timestamp", report.meta.timestamp},
                                 {"sheet_id", report.sheet_id},
                                 {"total", report.total()},
                                 {"total_max", report.total_max()},
                                 {"backend", report.meta.backend},
                                 {"config_hash", report.meta.config_hash}};
    std::ofstream log(fs::path(out_dir) / "runs.jsonl", std::ios::binary | std::ios::app);
    if (!log) throw IoError("cannot append to runs.jsonl in '" + out_dir + "'");
    log << line.dump() << "\n";
}

/// Reference marks for the expectation tally: `question_id,expected` rows.
inline std::map<std::string, double> load_expected_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read expected-marks file '" + path + "'");
    std::map<std::string, double> expected;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos)
            throw IoError("expected-marks line " + std::to_string(lineno) +
                          ": expected 'question_id,expected'");
        const std::string qid = detail::trim(t.substr(0, comma));
        const std::string value = detail::trim(t.substr(comma + 1));
        if (lineno == 1 && qid == "question_id") continue;  // header
        try {
            expected[qid] = std::stod(value);
        } catch (...) {
            throw IoError("expected-marks line " + std::to_string(lineno) + ": '" + value +
                          "' is not a number");
        }
    }
    return expected;
}

struct ExpectationRow {
    std::string sheet_id;
    std::string question_id;
    double combined_score = 0.0;
    double expected = 0.0;
    bool within = false;
};

struct ExpectationTally {
    std::vector<ExpectationRow> rows;
    int within_count = 0;
    int total_count = 0;  // questions with a reference mark
    int skipped = 0;      // questions with no reference mark
};

/// Reads every *.report.json under `results_dir`, joins it with the reference
/// marks, and counts questions whose combined score lies within the band.
/// This is the mechanism behind the as-per-expectations statistic.
inline ExpectationTally expectation_tally(const std::string& results_dir,
                                          const std::map<std::string, double>& expected,
                                          double band = 0.5) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    if (!fs::is_directory(results_dir))
        throw IoError("results directory '" + results_dir + "' does not exist");
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 12 &&
            name.substr(name.size() - 12) == ".report.json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    ExpectationTally tally;
    for (const auto& file : files) {
        const auto j = nlohmann::json::parse(read_file(file.string()), nullptr, false);
        if (j.is_discarded()) throw SchemaError(file.string(), "invalid JSON");
        Report report = report_from_json(j);
        for (auto& q : report.questions) {
            const auto it = expected.find(q.question_id);
            if (it == expected.end()) {
                ++tally.skipped;
                continue;
            }
            const bool within = check_expectation(q, it->second, band);
            tally.rows.push_back(
                {report.sheet_id, q.question_id, q.combined_score, it->second, within});
            tally.within_count += within;
            ++tally.total_count;
        }
    }
    return tally;
}

}  // namespace flowgrade
