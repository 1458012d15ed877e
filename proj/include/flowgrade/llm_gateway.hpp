#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "flowgrade/canonical.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/scoring.hpp"
#include "flowgrade/verdict.hpp"

namespace flowgrade {

enum class GradingKind { Text, Diagram };

/// One grading job for the gateway: the student and model payloads are either
/// raw answer text or canonical diagram serializations.
struct GradingRequest {
    std::string question_id;
    GradingKind kind = GradingKind::Text;
    std::string student_payload;
    std::string model_payload;
    double max_marks = 0.0;
    std::vector<std::string> rubric_factors;  // empty = defaults for the kind
    std::string question_text;                // included in the prompt when available
};

inline const std::vector<std::string>& default_text_factors() {
    static const std::vector<std::string> factors = {
        "grammatical correctness",
        "the structure of the sentence",
        "important points coverage",
    };
    return factors;
}

inline const std::vector<std::string>& default_diagram_factors() {
    static const std::vector<std::string> factors = {
        "the shape of the blocks",
        "the connection of the blocks and their order",
        "the text present inside the blocks",
    };
    return factors;
}

/// Chat-completion backend settings. The API key is never stored; only the
/// name of the environment variable holding it.
struct BackendConfig {
    std::string endpoint = "http://localhost:8000";  // POST {endpoint}/chat/completions
    std::string model = "mistral-7b-instruct";
    std::string api_key_env = "FLOWGRADE_LLM_API_KEY";
    double timeout_seconds = 30.0;
    int max_retries = 2;
    double temperature = 0.0;
    double retry_base_seconds = 1.0;  // exponential backoff base, factor 2
    int parallelism = 4;              // max in-flight requests
};

/// Reads endpoint/model defaults from FLOWGRADE_LLM_ENDPOINT and
/// FLOWGRADE_LLM_MODEL when those variables are set.
inline BackendConfig backend_config_from_env() {
    BackendConfig cfg;
    if (const char* e = std::getenv("FLOWGRADE_LLM_ENDPOINT")) cfg.endpoint = e;
    if (const char* m = std::getenv("FLOWGRADE_LLM_MODEL")) cfg.model = m;
    return cfg;
}

// Prompt templates live in prompts/ as editable files; these embedded copies
// keep the binary self-contained when the files are not shipped alongside it.
inline constexpr const char* kTextPromptTemplate =
    R"(You are grading a student's written answer against the model answer.

Question: {{question}}
Maximum marks: {{max_marks}}

Model answer:
<<<MODEL
{{model_answer}}
MODEL>>>

Student answer:
<<<STUDENT
{{student_answer}}
STUDENT>>>

Evaluate the student answer by comparing it to the model answer with respect to:
{{factors}}

Assign a score out of {{max_marks}}.
Reply with a single JSON object {"score": number, "max": number, "justification": string} and nothing else.
)";

inline constexpr const char* kDiagramPromptTemplate =
    R"(You are grading a student's flowchart against the model flowchart.
Both diagrams are given in a textual representation: one record per block
listing its id, neighbor count, previous block, next block(s), block type,
and the text inside the block.

Question: {{question}}
Maximum marks: {{max_marks}}

Model flowchart:
<<<MODEL
{{model_answer}}
MODEL>>>

Student flowchart:
<<<STUDENT
{{student_answer}}
STUDENT>>>

Judge the student flowchart against the model with respect to:
{{factors}}

Labels that differ in wording but not in meaning (for example yes/no versus
true/false on condition branches) must not lose marks.
Assign a score out of {{max_marks}}.
Reply with a single JSON object {"score": number, "max": number, "justification": string} and nothing else.
)";

struct PromptTemplates {
    std::string text = kTextPromptTemplate;
    std::string diagram = kDiagramPromptTemplate;
};

inline std::string load_template(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read prompt template '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

inline std::string format_number(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

inline std::string render_prompt(const std::string& tmpl, const GradingRequest& req,
                                 const std::vector<std::string>& default_factors) {
    const auto& factors = req.rubric_factors.empty() ? default_factors : req.rubric_factors;
    std::string factor_lines;
    for (const auto& f : factors) factor_lines += "- " + f + "\n";
    if (!factor_lines.empty()) factor_lines.pop_back();

    std::string out = tmpl;
    replace_all(out, "{{question}}",
                req.question_text.empty() ? req.question_id : req.question_text);
    replace_all(out, "{{max_marks}}", format_number(req.max_marks));
    replace_all(out, "{{model_answer}}", req.model_payload);
    replace_all(out, "{{student_answer}}", req.student_payload);
    replace_all(out, "{{factors}}", factor_lines);
    return out;
}

}  // namespace detail

inline std::string build_text_prompt(const GradingRequest& req,
                                     const PromptTemplates& templates = {}) {
    return detail::render_prompt(templates.text, req, default_text_factors());
}

inline std::string build_diagram_prompt(const GradingRequest& req,
                                        const PromptTemplates& templates = {}) {
    return detail::render_prompt(templates.diagram, req, default_diagram_factors());
}

inline std::string build_prompt(const GradingRequest& req,
                                const PromptTemplates& templates = {}) {
    return req.kind == GradingKind::Text ? build_text_prompt(req, templates)
                                         : build_diagram_prompt(req, templates);
}

namespace detail {

/// Extracts the first substring that is a balanced, parseable JSON object.
inline std::optional<nlohmann::json> first_json_object(const std::string& raw) {
    for (std::size_t start = raw.find('{'); start != std::string::npos;
         start = raw.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}') {
                if (--depth == 0) {
                    const auto candidate =
                        nlohmann::json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!candidate.is_discarded() && candidate.is_object()) return candidate;
                    break;  // balanced but unparseable; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

inline std::optional<double> json_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return std::stod(v.get<std::string>());
        } catch (...) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Parses a raw grader reply into a verdict. Strategy: first balanced JSON
/// object with a numeric "score"; otherwise a case-insensitive
/// "score: x[/y]" pattern anywhere in the text. Scores are clamped to
/// [0, max_marks]; clamped or pattern-parsed verdicts are flagged
/// approximate. Raises UnparsableVerdict when both strategies fail.
inline GradingVerdict parse_verdict(const std::string& raw, double max_marks) {
    GradingVerdict v;
    v.max = max_marks;

    std::optional<double> score;
    bool fallback_used = false;

    if (const auto obj = detail::first_json_object(raw)) {
        if (const auto s = detail::json_number(*obj, "score")) {
            score = *s;
            if (const auto m = detail::json_number(*obj, "max");
                m && *m > 0 && *m != max_marks)
                score = *s / *m * max_marks;
            if (obj->contains("justification") && obj->at("justification").is_string())
                v.justification = obj->at("justification").get<std::string>();
        }
    }
    if (!score) {
        static const std::regex pattern(R"(score\s*[:=]?\s*([0-9.]+)\s*(?:/\s*([0-9.]+))?)",
                                        std::regex::icase);
        std::smatch m;
        if (std::regex_search(raw, m, pattern)) {
            try {
                double s = std::stod(m[1].str());
                if (m[2].matched) {
                    const double denom = std::stod(m[2].str());
                    if (denom > 0 && denom != max_marks) s = s / denom * max_marks;
                }
                score = s;
                fallback_used = true;
                v.justification = raw;
            } catch (...) {
                // fall through to UnparsableVerdict
            }
        }
    }
    if (!score) throw UnparsableVerdict("no score found in reply");

    double s = *score;
    bool clamped = false;
    if (s < 0) {
        s = 0;
        clamped = true;
    } else if (s > max_marks) {
        s = max_marks;
        clamped = true;
    }
    v.score = s;
    v.approximate = fallback_used || clamped;
    return v;
}

/// Transient backend failure (transport error or 5xx); the gateway retries
/// these with exponential backoff.
class RetryableBackendError : public Error {
public:
    explicit RetryableBackendError(const std::string& detail) : Error(detail) {}
};

/// A chat-completion backend: given a grading request and its rendered
/// prompt, returns the assistant's reply text.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const GradingRequest& req, const std::string& prompt) = 0;
    virtual std::string name() const = 0;
};

/// Deterministic offline backend. Text requests score via the deterministic
/// text formula; diagram requests re-parse both canonical payloads and score
/// max_marks times the graph similarity. Bit-stable across runs.
class MockBackend : public ChatBackend {
public:
    MockBackend() = default;
    explicit MockBackend(SynonymTable synonyms) : synonyms_(std::move(synonyms)) {}

    std::string complete(const GradingRequest& req, const std::string&) override {
        nlohmann::json out;
        if (req.kind == GradingKind::Text) {
            const GradingVerdict v = deterministic_text_score(
                req.student_payload, req.model_payload, std::nullopt, req.max_marks);
            out = {{"score", v.score}, {"max", v.max}, {"justification", v.justification}};
        } else {
            const FlowGraph student = parse_canonical(req.student_payload);
            const FlowGraph model = parse_canonical(req.model_payload);
            const SimilarityScore sim = graph_similarity(student, model, {}, synonyms_);
            std::ostringstream why;
            why << "graph similarity " << sim.value << " (types "
                << sim.components.at("types") << ", edges " << sim.components.at("edges")
                << ", text " << sim.components.at("text") << ")";
            out = {{"score", round_to_step(req.max_marks * sim.value, 0.5)},
                   {"max", req.max_marks},
                   {"justification", why.str()}};
        }
        return out.dump();
    }

    std::string name() const override { return "mock"; }

private:
    SynonymTable synonyms_;
};

/// HTTP chat-completion backend speaking the standard wire contract:
/// POST {endpoint}/chat/completions with {model, messages, temperature},
/// bearer token from the configured environment variable, reply content at
/// choices[0].message.content.
class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {}

    std::string complete(const GradingRequest&, const std::string& prompt) override {
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));

        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);

        const nlohmann::json body = {
            {"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", config_.temperature},
        };
        auto res = client.Post("/chat/completions", headers, body.dump(), "application/json");
        if (!res)
            throw RetryableBackendError("transport error: " + httplib::to_string(res.error()));
        if (res->status >= 500)
            throw RetryableBackendError("server returned " + std::to_string(res->status));
        if (res->status != 200)
            throw BackendUnavailable("server returned " + std::to_string(res->status) + ": " +
                                     res->body);
        const auto reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("message") ||
            !reply["choices"][0]["message"].contains("content"))
            throw UnparsableVerdict("malformed chat-completion envelope");
        return reply["choices"][0]["message"]["content"].get<std::string>();
    }

    std::string name() const override { return "http:" + config_.model; }

private:
    BackendConfig config_;
};

namespace detail {

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}
    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

}  // namespace detail

/// Grading front door: renders the prompt, bounds in-flight requests, retries
/// transient backend failures with exponential backoff (base 1 s, factor 2 by
/// default), and parses the reply. Parse failures are never retried.
class Gateway {
public:
    explicit Gateway(BackendConfig config = {}, PromptTemplates templates = {})
        : config_(std::move(config)),
          templates_(std::move(templates)),
          slots_(config_.parallelism > 0 ? config_.parallelism : 1) {}

    const BackendConfig& config() const { return config_; }
    const PromptTemplates& templates() const { return templates_; }

    GradingVerdict grade(const GradingRequest& req, ChatBackend& backend) {
        const std::string prompt = build_prompt(req, templates_);

        slots_.acquire();
        struct Release {
            detail::Semaphore& s;
            ~Release() { s.release(); }
        } release{slots_};

        std::string raw;
        std::string last_error;
        bool got_reply = false;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                const double delay =
                    config_.retry_base_seconds * std::pow(2.0, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            try {
                raw = backend.complete(req, prompt);
                got_reply = true;
                break;
            } catch (const RetryableBackendError& e) {
                last_error = e.what();
            }
        }
        if (!got_reply)
            throw BackendUnavailable(last_error + " (after " +
                                     std::to_string(config_.max_retries + 1) + " attempts)");

        GradingVerdict v = parse_verdict(raw, req.max_marks);
        v.backend = backend.name();
        return v;
    }

private:
    BackendConfig config_;
    PromptTemplates templates_;
    detail::Semaphore slots_;
};

}  // namespace flowgrade
