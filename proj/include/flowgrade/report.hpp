#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgrade/errors.hpp"
#include "flowgrade/verdict.hpp"

namespace flowgrade {

struct QuestionResult {
    std::string question_id;
    std::optional<GradingVerdict> text_verdict;
    std::optional<GradingVerdict> diagram_verdict;
    double combined_score = 0.0;
    double max_marks = 0.0;
    std::vector<Diagnostic> warnings;
    std::optional<bool> within_expectation;
};

struct RunMeta {
    std::string backend;
    std::string config_hash;
    std::string timestamp;  // ISO 8601 UTC
    std::vector<Diagnostic> sheet_warnings;
};

/// Question-wise segmented score report for one sheet. Totals are recomputed
/// from the per-question results, never trusted from storage.
struct Report {
    std::string sheet_id;
    std::vector<QuestionResult> questions;
    RunMeta meta;

    double total() const {
        double t = 0.0;
        for (const auto& q : questions) t += q.combined_score;
        return t;
    }
    double total_max() const {
        double t = 0.0;
        for (const auto& q : questions) t += q.max_marks;
        return t;
    }
};

/// Orders "Q2" before "Q10": digit runs compare numerically, the rest by char.
inline bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ai = i, bj = j;
            while (ai < a.size() && std::isdigit(static_cast<unsigned char>(a[ai]))) ++ai;
            while (bj < b.size() && std::isdigit(static_cast<unsigned char>(b[bj]))) ++bj;
            const std::string na = a.substr(i, ai - i), nb = b.substr(j, bj - j);
            const std::string ta = na.substr(std::min(na.find_first_not_of('0'), na.size() - 1));
            const std::string tb = nb.substr(std::min(nb.find_first_not_of('0'), nb.size() - 1));
            if (ta.size() != tb.size()) return ta.size() < tb.size();
            if (ta != tb) return ta < tb;
            i = ai;
            j = bj;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return a.size() < b.size();
}

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const Diagnostic& d) {
    return {{"code", d.code}, {"message", d.message}};
}

inline nlohmann::json to_json(const GradingVerdict& v) {
    return {{"score", v.score},
            {"max", v.max},
            {"justification", v.justification},
            {"backend", v.backend},
            {"approximate", v.approximate}};
}

inline nlohmann::json to_json(const Report& report) {
    nlohmann::json questions = nlohmann::json::array();
    for (const auto& q : report.questions) {
        nlohmann::json qj = {
            {"question_id", q.question_id},
            {"combined_score", q.combined_score},
            {"max_marks", q.max_marks},
            {"warnings", nlohmann::json::array()},
        };
        for (const auto& w : q.warnings) qj["warnings"].push_back(to_json(w));
        if (q.text_verdict) qj["text_verdict"] = to_json(*q.text_verdict);
        if (q.diagram_verdict) qj["diagram_verdict"] = to_json(*q.diagram_verdict);
        if (q.within_expectation) qj["within_expectation"] = *q.within_expectation;
        questions.push_back(std::move(qj));
    }
    nlohmann::json meta = {
        {"backend", report.meta.backend},
        {"config_hash", report.meta.config_hash},
        {"timestamp", report.meta.timestamp},
        {"sheet_warnings", nlohmann::json::array()},
    };
    for (const auto& w : report.meta.sheet_warnings) meta["sheet_warnings"].push_back(to_json(w));
    return {{"sheet_id", report.sheet_id},
            {"questions", std::move(questions)},
            {"total", report.total()},
            {"total_max", report.total_max()},
            {"meta", std::move(meta)}};
}

namespace detail {

inline double require_number_field(const nlohmann::json& j, const char* key,
                                   const std::string& path) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw SchemaError(path + "." + key, "expected a number");
    return j.at(key).get<double>();
}

inline GradingVerdict verdict_from_json(const nlohmann::json& j, const std::string& path) {
    GradingVerdict v;
    v.score = require_number_field(j, "score", path);
    v.max = require_number_field(j, "max", path);
    if (j.contains("justification") && j.at("justification").is_string())
        v.justification = j.at("justification").get<std::string>();
    if (j.contains("backend") && j.at("backend").is_string())
        v.backend = j.at("backend").get<std::string>();
    if (j.contains("approximate") && j.at("approximate").is_boolean())
        v.approximate = j.at("approximate").get<bool>();
    return v;
}

}  // namespace detail

/// Loads a report written by to_json. Totals are recomputed, not read back.
inline Report report_from_json(const nlohmann::json& j) {
    Report report;
    if (!j.is_object()) throw SchemaError("$", "expected a report object");
    if (j.contains("sheet_id") && j.at("sheet_id").is_string())
        report.sheet_id = j.at("sheet_id").get<std::string>();
    if (!j.contains("questions") || !j.at("questions").is_array())
        throw SchemaError("$.questions", "expected an array");
    for (std::size_t i = 0; i < j.at("questions").size(); ++i) {
        const auto& qj = j.at("questions")[i];
        const std::string path = "questions[" + std::to_string(i) + "]";
        QuestionResult q;
        if (!qj.contains("question_id") || !qj.at("question_id").is_string())
            throw SchemaError(path + ".question_id", "expected a string");
        q.question_id = qj.at("question_id").get<std::string>();
        q.combined_score = detail::require_number_field(qj, "combined_score", path);
        q.max_marks = detail::require_number_field(qj, "max_marks", path);
        if (qj.contains("text_verdict"))
            q.text_verdict = detail::verdict_from_json(qj.at("text_verdict"), path + ".text_verdict");
        if (qj.contains("diagram_verdict"))
            q.diagram_verdict =
                detail::verdict_from_json(qj.at("diagram_verdict"), path + ".diagram_verdict");
        if (qj.contains("within_expectation") && qj.at("within_expectation").is_boolean())
            q.within_expectation = qj.at("within_expectation").get<bool>();
        if (qj.contains("warnings") && qj.at("warnings").is_array())
            for (const auto& wj : qj.at("warnings"))
                q.warnings.push_back({wj.value("code", std::string{}),
                                      wj.value("message", std::string{})});
        report.questions.push_back(std::move(q));
    }
    if (j.contains("meta") && j.at("meta").is_object()) {
        const auto& mj = j.at("meta");
        report.meta.backend = mj.value("backend", std::string{});
        report.meta.config_hash = mj.value("config_hash", std::string{});
        report.meta.timestamp = mj.value("timestamp", std::string{});
        if (mj.contains("sheet_warnings") && mj.at("sheet_warnings").is_array())
            for (const auto& wj : mj.at("sheet_warnings"))
                report.meta.sheet_warnings.push_back(
                    {wj.value("code", std::string{}), wj.value("message", std::string{})});
    }
    return report;
}

}  // namespace flowgrade
