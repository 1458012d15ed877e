#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "flowgrade/canonical.hpp"
#include "flowgrade/config.hpp"
#include "flowgrade/ingest.hpp"
#include "flowgrade/orchestrator.hpp"

namespace flowgrade {

namespace detail {

inline nlohmann::json error_body(const std::string& message, const std::string& path = "") {
    nlohmann::json err = {{"message", message}};
    if (!path.empty()) err["path"] = path;
    return {{"error", err}};
}

}  // namespace detail

/// Embeddable HTTP service exposing the evaluation pipeline. Each request is
/// independent; there is no shared mutable state beyond the gateway's
/// parallelism bound.
class Service {
public:
    explicit Service(Config config = {})
        : config_(std::move(config)), gateway_(config_.backend, config_.prompts) {
        if (config_.backend_kind == "http")
            backend_ = std::make_unique<HttpBackend>(config_.backend);
        else
            backend_ = std::make_unique<MockBackend>(config_.synonyms);
        install_routes();
    }

    /// Binds and serves on the given port, blocking the calling thread.
    bool listen(const std::string& host, int port) { return server_.listen(host, port); }

    /// Binds an ephemeral port and serves on a background thread (tests).
    int start_background(const std::string& host = "127.0.0.1") {
        const int port = server_.bind_to_any_port(host);
        if (port < 0) return port;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port;
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    ~Service() { stop(); }

private:
    void install_routes() {
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(nlohmann::json({{"status", "ok"}}).dump(), "application/json");
        });

        server_.Post("/v1/diagrams/parse", [this](const httplib::Request& req,
                                                  httplib::Response& res) {
            handle(res, [&]() -> nlohmann::json {
                const auto body = nlohmann::json::parse(req.body, nullptr, false);
                if (body.is_discarded()) throw SchemaError("$", "request body is not valid JSON");

                const Block* chosen = nullptr;
                Sheet sheet;
                Block single;
                if (body.is_object() && body.contains("pages")) {
                    sheet = parse_detections(body.dump());
                    classify_blocks(sheet.blocks, config_.ingest.density_threshold);
                    std::string wanted;
                    if (body.contains("block_id") && body.at("block_id").is_string())
                        wanted = body.at("block_id").get<std::string>();
                    for (const auto& b : sheet.blocks) {
                        if (!wanted.empty() ? b.id == wanted : b.kind == BlockKind::Diagram) {
                            chosen = &b;
                            break;
                        }
                    }
                    if (!chosen)
                        throw SchemaError("$.block_id",
                                          wanted.empty() ? "document contains no diagram block"
                                                         : "no block with id '" + wanted + "'");
                } else if (body.is_object()) {
                    single.id = body.value("id", std::string("block"));
                    single.bbox = detail::parse_bbox(
                        body.contains("bbox") ? body.at("bbox") : nlohmann::json(), "$.bbox");
                    if (body.contains("words"))
                        for (std::size_t i = 0; i < body.at("words").size(); ++i)
                            single.words.push_back(detail::parse_word(
                                body.at("words")[i], "$.words[" + std::to_string(i) + "]"));
                    if (body.contains("primitives"))
                        for (std::size_t i = 0; i < body.at("primitives").size(); ++i)
                            single.primitives.push_back(detail::parse_primitive(
                                body.at("primitives")[i], static_cast<int>(i),
                                "$.primitives[" + std::to_string(i) + "]"));
                    chosen = &single;
                } else {
                    throw SchemaError("$", "expected a detections document or a block object");
                }

                FlowGraph graph =
                    build_graph(chosen->primitives, chosen->words, config_.ingest.graph);
                std::vector<Diagnostic> warnings = graph.warnings;
                const std::string canonical = serialize(graph, &warnings);
                nlohmann::json warn = nlohmann::json::array();
                for (const auto& w : warnings) warn.push_back(to_json(w));
                return {{"block_id", chosen->id},
                        {"canonical_text", canonical},
                        {"warnings", std::move(warn)}};
            });
        });

        server_.Post("/v1/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
            handle(res, [&]() -> nlohmann::json {
                const auto body = nlohmann::json::parse(req.body, nullptr, false);
                if (body.is_discarded()) throw SchemaError("$", "request body is not valid JSON");
                if (!body.is_object() || !body.contains("detections"))
                    throw SchemaError("$.detections", "missing detections document");
                if (!body.contains("key")) throw SchemaError("$.key", "missing answer key");
                const std::string sheet_id = body.value("sheet_id", std::string("sheet"));
                const AnswerKey key =
                    parse_answer_key(body.at("key").dump(), config_.ingest.graph);
                const Report report = evaluate_sheet(body.at("detections").dump(), key, config_,
                                                     *backend_, gateway_, sheet_id);
                return to_json(report);
            });
        });
    }

    template <typename Fn>
    void handle(httplib::Response& res, Fn&& fn) {
        try {
            res.set_content(fn().dump(2), "application/json");
        } catch (const SchemaError& e) {
            res.status = 400;
            res.set_content(detail::error_body(e.what(), e.path()).dump(), "application/json");
        } catch (const VersionError& e) {
            res.status = 400;
            res.set_content(detail::error_body(e.what()).dump(), "application/json");
        } catch (const EmptyDiagram& e) {
            res.status = 400;
            res.set_content(detail::error_body(e.what()).dump(), "application/json");
        } catch (const Error& e) {
            res.status = 500;
            res.set_content(detail::error_body(e.what()).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(detail::error_body(e.what()).dump(), "application/json");
        }
    }

    Config config_;
    Gateway gateway_;
    std::unique_ptr<ChatBackend> backend_;
    httplib::Server server_;
    std::thread thread_;
};

}  // namespace flowgrade
