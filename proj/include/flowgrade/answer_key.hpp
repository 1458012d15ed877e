#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgrade/canonical.hpp"
#include "flowgrade/detections.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/flowgraph.hpp"
#include "flowgrade/ingest.hpp"

namespace flowgrade {

struct ModalityWeights {
    double text = 0.6;
    double diagram = 0.4;
};

/// The reference answer for one question: model text, optional model diagram
/// (supplied as canonical text or as raw detections primitives), marks, and
/// optional keywords / per-question weight overrides.
struct QuestionSpec {
    std::string question_id;
    std::string question_text;
    std::string model_text;
    double max_marks = 0.0;
    std::optional<std::set<std::string>> keywords;
    std::optional<ModalityWeights> weights;
    std::optional<FlowGraph> model_graph;
    std::optional<ManifestRegion> region;  // manifest anchor policy
};

struct AnswerKey {
    std::vector<QuestionSpec> questions;

    const QuestionSpec* find(const std::string& qid) const {
        for (const auto& q : questions)
            if (q.question_id == qid) return &q;
        return nullptr;
    }
    std::vector<ManifestRegion> regions() const {
        std::vector<ManifestRegion> out;
        for (const auto& q : questions)
            if (q.region) out.push_back(*q.region);
        return out;
    }
};

/// Parses an answer key document (JSON). Model diagrams given as detections
/// primitives are reconstructed with `graph_config`; canonical text is parsed
/// directly.
inline AnswerKey parse_answer_key(const std::string& document,
                                  const GraphConfig& graph_config = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("questions") || !j.at("questions").is_array())
        throw SchemaError("$.questions", "expected an array");

    AnswerKey key;
    const auto& questions = j.at("questions");
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        const std::string path = "questions[" + std::to_string(qi) + "]";
        const auto& qj = questions[qi];
        if (!qj.is_object()) throw SchemaError(path, "expected an object");

        QuestionSpec spec;
        spec.question_id = detail::require_string(qj, "question_id", path);
        if (spec.question_id.empty()) throw SchemaError(path + ".question_id", "must be nonempty");
        spec.max_marks = detail::require_number(qj, "max_marks", path);
        if (spec.max_marks <= 0) throw SchemaError(path + ".max_marks", "must be positive");
        if (qj.contains("question") && qj.at("question").is_string())
            spec.question_text = qj.at("question").get<std::string>();
        if (qj.contains("model_text")) {
            if (!qj.at("model_text").is_string())
                throw SchemaError(path + ".model_text", "expected a string");
            spec.model_text = qj.at("model_text").get<std::string>();
        }

        if (qj.contains("keywords")) {
            const auto& kws = qj.at("keywords");
            if (!kws.is_array()) throw SchemaError(path + ".keywords", "expected an array");
            std::set<std::string> set;
            for (const auto& kw : kws) {
                if (!kw.is_string())
                    throw SchemaError(path + ".keywords", "expected an array of strings");
                set.insert(kw.get<std::string>());
            }
            if (!set.empty()) spec.keywords = std::move(set);
        }

        if (qj.contains("weights")) {
            const auto& wj = qj.at("weights");
            ModalityWeights w;
            w.text = detail::require_number(wj, "text", path + ".weights");
            w.diagram = detail::require_number(wj, "diagram", path + ".weights");
            if (w.text < 0 || w.diagram < 0 || std::abs(w.text + w.diagram - 1.0) > 1e-9)
                throw SchemaError(path + ".weights", "must be nonnegative and sum to 1");
            spec.weights = w;
        }

        if (qj.contains("model_diagram")) {
            const auto& dj = qj.at("model_diagram");
            const std::string dpath = path + ".model_diagram";
            if (dj.is_object() && dj.contains("canonical_text")) {
                if (!dj.at("canonical_text").is_string())
                    throw SchemaError(dpath + ".canonical_text", "expected a string");
                spec.model_graph = parse_canonical(dj.at("canonical_text").get<std::string>());
            } else if (dj.is_object() && dj.contains("primitives")) {
                const auto& prims = dj.at("primitives");
                if (!prims.is_array())
                    throw SchemaError(dpath + ".primitives", "expected an array");
                std::vector<Primitive> primitives;
                for (std::size_t pi = 0; pi < prims.size(); ++pi)
                    primitives.push_back(detail::parse_primitive(
                        prims[pi], static_cast<int>(pi),
                        dpath + ".primitives[" + std::to_string(pi) + "]"));
                std::vector<TextFragment> words;
                if (dj.contains("words")) {
                    const auto& ws = dj.at("words");
                    if (!ws.is_array()) throw SchemaError(dpath + ".words", "expected an array");
                    for (std::size_t wi = 0; wi < ws.size(); ++wi)
                        words.push_back(detail::parse_word(
                            ws[wi], dpath + ".words[" + std::to_string(wi) + "]"));
                }
                spec.model_graph = build_graph(primitives, words, graph_config);
            } else {
                throw SchemaError(dpath, "expected 'canonical_text' or 'primitives'");
            }
        }

        if (spec.model_text.empty() && !spec.model_graph)
            throw SchemaError(path, "question needs model_text and/or model_diagram");

        if (qj.contains("region")) {
            const auto& rj = qj.at("region");
            ManifestRegion region;
            region.question_id = spec.question_id;
            region.page = static_cast<int>(detail::require_number(rj, "page", path + ".region"));
            region.region = detail::parse_bbox(
                rj.contains("bbox") ? rj.at("bbox") : nlohmann::json(), path + ".region.bbox");
            spec.region = region;
        }

        for (const auto& existing : key.questions)
            if (existing.question_id == spec.question_id)
                throw SchemaError(path + ".question_id",
                                  "duplicate question id '" + spec.question_id + "'");
        key.questions.push_back(std::move(spec));
    }
    return key;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline AnswerKey load_answer_key(const std::string& path, const GraphConfig& graph_config = {}) {
    return parse_answer_key(read_file(path), graph_config);
}

}  // namespace flowgrade
