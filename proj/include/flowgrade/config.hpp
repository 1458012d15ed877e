#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flowgrade/errors.hpp"
#include "flowgrade/ingest.hpp"
#include "flowgrade/llm_gateway.hpp"
#include "flowgrade/scoring.hpp"

namespace flowgrade {

struct AggregateConfig {
    double text_weight = 0.6;
    double diagram_weight = 0.4;
    double expectation_band = 0.5;  // marks
    double rounding_step = 0.5;
};

/// Full engine configuration. Loadable from an INI-style file (sections,
/// key = value lines, '#' comments); every field has a usable default.
struct Config {
    IngestConfig ingest;
    GraphWeights graph_weights;
    SynonymTable synonyms;
    BackendConfig backend;
    std::string backend_kind = "mock";  // "mock" or "http"
    PromptTemplates prompts;
    AggregateConfig aggregate;
};

namespace detail {

struct IniEntry {
    std::string section;
    std::string key;
    std::string value;
};

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<IniEntry> parse_ini(const std::string& text) {
    std::vector<IniEntry> entries;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        entries.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1))});
    }
    return entries;
}

inline double to_double(const IniEntry& e) {
    try {
        std::size_t used = 0;
        const double v = std::stod(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("[" + e.section + "] " + e.key + ": '" + e.value + "' is not a number");
    }
}

inline int to_int(const IniEntry& e) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(e.value, &used);
        if (used != e.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("[" + e.section + "] " + e.key + ": '" + e.value + "' is not an integer");
    }
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream ss(value);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) parts.push_back(t);
    }
    return parts;
}

}  // namespace detail

inline Config parse_config(const std::string& text) {
    Config cfg;
    cfg.backend = backend_config_from_env();
    bool synonyms_cleared = false;

    for (const auto& e : detail::parse_ini(text)) {
        const std::string where = "[" + e.section + "] " + e.key;
        if (e.section == "ingest") {
            if (e.key == "density_threshold") {
                cfg.ingest.density_threshold = detail::to_double(e);
                if (cfg.ingest.density_threshold < 0 || cfg.ingest.density_threshold > 1)
                    throw ConfigError(where + ": must be in [0,1]");
            } else if (e.key == "low_confidence") {
                cfg.ingest.low_confidence = detail::to_double(e);
            } else if (e.key == "anchor_policy") {
                if (e.value == "regex") cfg.ingest.anchor.kind = AnchorPolicy::Kind::Regex;
                else if (e.value == "manifest") cfg.ingest.anchor.kind = AnchorPolicy::Kind::Manifest;
                else throw ConfigError(where + ": expected 'regex' or 'manifest'");
            }
        } else if (e.section == "flowgraph") {
            if (e.key == "iou_threshold") {
                cfg.ingest.graph.iou_threshold = detail::to_double(e);
                if (cfg.ingest.graph.iou_threshold <= 0 || cfg.ingest.graph.iou_threshold > 1)
                    throw ConfigError(where + ": must be in (0,1]");
            } else if (e.key == "attach_epsilon") {
                cfg.ingest.graph.attach_epsilon = detail::to_double(e);
                if (cfg.ingest.graph.attach_epsilon <= 0)
                    throw ConfigError(where + ": must be positive");
            }
        } else if (e.section == "scoring") {
            if (e.key == "type_weight") cfg.graph_weights.type = detail::to_double(e);
            else if (e.key == "edge_weight") cfg.graph_weights.edge = detail::to_double(e);
            else if (e.key == "text_weight") cfg.graph_weights.text = detail::to_double(e);
            else if (e.key == "synonyms") {
                if (!synonyms_cleared) {
                    cfg.synonyms.classes.clear();
                    synonyms_cleared = true;
                }
                const auto cls = detail::split_list(e.value);
                if (cls.size() < 2) throw ConfigError(where + ": a class needs >= 2 members");
                cfg.synonyms.classes.push_back(cls);
            }
        } else if (e.section == "gateway") {
            if (e.key == "backend") {
                if (e.value != "mock" && e.value != "http")
                    throw ConfigError(where + ": expected 'mock' or 'http'");
                cfg.backend_kind = e.value;
            } else if (e.key == "endpoint") cfg.backend.endpoint = e.value;
            else if (e.key == "model") cfg.backend.model = e.value;
            else if (e.key == "api_key_env") cfg.backend.api_key_env = e.value;
            else if (e.key == "timeout_seconds") {
                cfg.backend.timeout_seconds = detail::to_double(e);
                if (cfg.backend.timeout_seconds <= 0) throw ConfigError(where + ": must be positive");
            } else if (e.key == "max_retries") {
                cfg.backend.max_retries = detail::to_int(e);
                if (cfg.backend.max_retries < 0) throw ConfigError(where + ": must be >= 0");
            } else if (e.key == "temperature") cfg.backend.temperature = detail::to_double(e);
            else if (e.key == "retry_base_seconds") {
                cfg.backend.retry_base_seconds = detail::to_double(e);
                if (cfg.backend.retry_base_seconds < 0) throw ConfigError(where + ": must be >= 0");
            } else if (e.key == "parallelism") {
                cfg.backend.parallelism = detail::to_int(e);
                if (cfg.backend.parallelism < 1) throw ConfigError(where + ": must be >= 1");
            } else if (e.key == "text_template") {
                if (!e.value.empty()) cfg.prompts.text = load_template(e.value);
            } else if (e.key == "diagram_template") {
                if (!e.value.empty()) cfg.prompts.diagram = load_template(e.value);
            }
        } else if (e.section == "aggregate") {
            if (e.key == "text_weight") cfg.aggregate.text_weight = detail::to_double(e);
            else if (e.key == "diagram_weight") cfg.aggregate.diagram_weight = detail::to_double(e);
            else if (e.key == "expectation_band") {
                cfg.aggregate.expectation_band = detail::to_double(e);
                if (cfg.aggregate.expectation_band < 0) throw ConfigError(where + ": must be >= 0");
            } else if (e.key == "rounding_step") cfg.aggregate.rounding_step = detail::to_double(e);
        }
        // Unknown sections and keys are ignored, like unknown detection fields.
    }

    const double wsum = cfg.graph_weights.type + cfg.graph_weights.edge + cfg.graph_weights.text;
    if (cfg.graph_weights.type < 0 || cfg.graph_weights.edge < 0 || cfg.graph_weights.text < 0 ||
        std::abs(wsum - 1.0) > 1e-9)
        throw ConfigError("[scoring] weights must be nonnegative and sum to 1");
    const double asum = cfg.aggregate.text_weight + cfg.aggregate.diagram_weight;
    if (cfg.aggregate.text_weight < 0 || cfg.aggregate.diagram_weight < 0 ||
        std::abs(asum - 1.0) > 1e-9)
        throw ConfigError("[aggregate] weights must be nonnegative and sum to 1");
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Stable hash of the effective configuration, recorded in report metadata so
/// results can be traced back to the settings that produced them.
inline std::string config_hash(const Config& cfg) {
    std::ostringstream dump;
    dump << cfg.ingest.density_threshold << '|' << cfg.ingest.low_confidence << '|'
         << static_cast<int>(cfg.ingest.anchor.kind) << '|' << cfg.ingest.graph.iou_threshold
         << '|' << cfg.ingest.graph.attach_epsilon << '|' << cfg.graph_weights.type << '|'
         << cfg.graph_weights.edge << '|' << cfg.graph_weights.text << '|';
    for (const auto& cls : cfg.synonyms.classes) {
        for (const auto& s : cls) dump << s << ',';
        dump << ';';
    }
    dump << '|' << cfg.backend_kind << '|' << cfg.backend.endpoint << '|' << cfg.backend.model
         << '|' << cfg.backend.temperature << '|' << cfg.backend.max_retries << '|'
         << cfg.aggregate.text_weight << '|' << cfg.aggregate.diagram_weight << '|'
         << cfg.aggregate.expectation_band << '|' << cfg.aggregate.rounding_step << '|'
         << cfg.prompts.text << '|' << cfg.prompts.diagram;
    const std::string s = dump.str();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << h;
    return hex.str();
}

}  // namespace flowgrade
