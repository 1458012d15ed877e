#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowgrade/errors.hpp"
#include "flowgrade/geometry.hpp"

namespace flowgrade {

enum class PrimitiveClass { Terminator, Process, Decision, Arrow, Arrowhead, Text };

inline bool is_block_class(PrimitiveClass c) {
    return c == PrimitiveClass::Terminator || c == PrimitiveClass::Process ||
           c == PrimitiveClass::Decision;
}

inline const char* to_string(PrimitiveClass c) {
    switch (c) {
        case PrimitiveClass::Terminator: return "terminator";
        case PrimitiveClass::Process: return "process";
        case PrimitiveClass::Decision: return "decision";
        case PrimitiveClass::Arrow: return "arrow";
        case PrimitiveClass::Arrowhead: return "arrowhead";
        case PrimitiveClass::Text: return "text";
    }
    return "?";
}

/// A recognized word with its box. Content arrives pre-recognized in the
/// detections file; this engine never touches pixels.
struct TextFragment {
    BoundingBox bbox;
    std::string text;
    double confidence = 1.0;
};

/// One detector output inside a diagram block: a shape, an arrow (with its
/// tail-to-head polyline), an arrowhead, or an unrecognized text region.
struct Primitive {
    int id = 0;  // ordinal within the block, assigned at parse time
    PrimitiveClass cls = PrimitiveClass::Process;
    BoundingBox bbox;
    double confidence = 1.0;
    std::vector<Point> polyline;  // arrows only, ordered tail to head
};

enum class BlockKind { Text, Diagram };

struct Block {
    std::string id;
    int page = 0;
    BoundingBox bbox;
    BlockKind kind = BlockKind::Text;
    std::optional<BlockKind> kind_hint;
    std::vector<TextFragment> words;
    std::vector<Primitive> primitives;
};

struct PageInfo {
    int index = 0;
    double width = 0;
    double height = 0;
};

struct Sheet {
    std::vector<PageInfo> pages;
    std::vector<Block> blocks;
};

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw SchemaError(path + "." + key, "missing required field");
    const auto& v = j.at(key);
    if (!v.is_number()) throw SchemaError(path + "." + key, "expected a number");
    return v.get<double>();
}

inline std::string require_string(const nlohmann::json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) throw SchemaError(path + "." + key, "missing required field");
    const auto& v = j.at(key);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline BoundingBox parse_bbox(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object {x,y,w,h}");
    BoundingBox b;
    b.x = require_number(j, "x", path);
    b.y = require_number(j, "y", path);
    b.w = require_number(j, "w", path);
    b.h = require_number(j, "h", path);
    if (b.w <= 0) throw SchemaError(path + ".w", "width must be positive");
    if (b.h <= 0) throw SchemaError(path + ".h", "height must be positive");
    if (b.x < 0) throw SchemaError(path + ".x", "must be non-negative");
    if (b.y < 0) throw SchemaError(path + ".y", "must be non-negative");
    return b;
}

inline PrimitiveClass parse_class(const std::string& s, const std::string& path) {
    if (s == "terminator") return PrimitiveClass::Terminator;
    if (s == "process") return PrimitiveClass::Process;
    if (s == "decision") return PrimitiveClass::Decision;
    if (s == "arrow") return PrimitiveClass::Arrow;
    if (s == "arrowhead") return PrimitiveClass::Arrowhead;
    if (s == "text") return PrimitiveClass::Text;
    throw SchemaError(path, "unknown primitive class '" + s + "'");
}

inline TextFragment parse_word(const nlohmann::json& j, const std::string& path) {
    TextFragment f;
    f.bbox = parse_bbox(j.contains("bbox") ? j.at("bbox") : nlohmann::json(), path + ".bbox");
    f.text = require_string(j, "text", path);
    f.confidence = require_number(j, "confidence", path);
    if (f.confidence < 0 || f.confidence > 1)
        throw SchemaError(path + ".confidence", "must be in [0,1]");
    return f;
}

inline Primitive parse_primitive(const nlohmann::json& j, int ordinal, const std::string& path) {
    Primitive p;
    p.id = ordinal;
    p.cls = parse_class(require_string(j, "class", path + ".class"), path + ".class");
    p.bbox = parse_bbox(j.contains("bbox") ? j.at("bbox") : nlohmann::json(), path + ".bbox");
    p.confidence = require_number(j, "confidence", path);
    if (p.confidence < 0 || p.confidence > 1)
        throw SchemaError(path + ".confidence", "must be in [0,1]");
    if (j.contains("polyline")) {
        const auto& poly = j.at("polyline");
        if (!poly.is_array()) throw SchemaError(path + ".polyline", "expected an array of points");
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const auto& pt = poly[i];
            const std::string ppath = path + ".polyline[" + std::to_string(i) + "]";
            if (pt.is_array() && pt.size() == 2 && pt[0].is_number() && pt[1].is_number()) {
                p.polyline.push_back({pt[0].get<double>(), pt[1].get<double>()});
            } else if (pt.is_object()) {
                p.polyline.push_back({require_number(pt, "x", ppath), require_number(pt, "y", ppath)});
            } else {
                throw SchemaError(ppath, "expected [x,y] or {x,y}");
            }
        }
    }
    if (p.cls == PrimitiveClass::Arrow && p.polyline.size() < 2)
        throw SchemaError(path + ".polyline", "arrow requires a polyline with at least 2 points");
    if (p.cls != PrimitiveClass::Arrow && !p.polyline.empty())
        throw SchemaError(path + ".polyline", "polyline is only valid on arrows");
    return p;
}

}  // namespace detail

/// Parses a detections document (JSON, UTF-8). Unknown fields are ignored;
/// schema violations raise SchemaError naming the offending field, and an
/// unsupported major version raises VersionError.
inline Sheet parse_detections(const std::string& document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("$", "top level must be an object");
    const std::string version = detail::require_string(j, "version", "$");
    const std::string major = version.substr(0, version.find('.'));
    if (major != "1") throw VersionError(version);

    if (!j.contains("pages") || !j.at("pages").is_array())
        throw SchemaError("$.pages", "expected an array");

    Sheet sheet;
    const auto& pages = j.at("pages");
    for (std::size_t pi = 0; pi < pages.size(); ++pi) {
        const std::string ppath = "pages[" + std::to_string(pi) + "]";
        const auto& pj = pages[pi];
        if (!pj.is_object()) throw SchemaError(ppath, "expected an object");
        PageInfo page;
        page.index = static_cast<int>(detail::require_number(pj, "index", ppath));
        if (page.index < 0) throw SchemaError(ppath + ".index", "must be non-negative");
        page.width = detail::require_number(pj, "width", ppath);
        page.height = detail::require_number(pj, "height", ppath);
        sheet.pages.push_back(page);

        if (!pj.contains("blocks")) continue;
        const auto& blocks = pj.at("blocks");
        if (!blocks.is_array()) throw SchemaError(ppath + ".blocks", "expected an array");
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const std::string bpath = ppath + ".blocks[" + std::to_string(bi) + "]";
            const auto& bj = blocks[bi];
            if (!bj.is_object()) throw SchemaError(bpath, "expected an object");
            Block block;
            block.id = detail::require_string(bj, "id", bpath);
            block.page = page.index;
            block.bbox = detail::parse_bbox(bj.contains("bbox") ? bj.at("bbox") : nlohmann::json(),
                                            bpath + ".bbox");
            if (bj.contains("kind_hint")) {
                const auto hint = detail::require_string(bj, "kind_hint", bpath);
                if (hint == "text") block.kind_hint = BlockKind::Text;
                else if (hint == "diagram") block.kind_hint = BlockKind::Diagram;
                else throw SchemaError(bpath + ".kind_hint", "expected 'text' or 'diagram'");
            }
            if (bj.contains("words")) {
                const auto& words = bj.at("words");
                if (!words.is_array()) throw SchemaError(bpath + ".words", "expected an array");
                for (std::size_t wi = 0; wi < words.size(); ++wi)
                    block.words.push_back(detail::parse_word(
                        words[wi], bpath + ".words[" + std::to_string(wi) + "]"));
            }
            if (bj.contains("primitives")) {
                const auto& prims = bj.at("primitives");
                if (!prims.is_array()) throw SchemaError(bpath + ".primitives", "expected an array");
                for (std::size_t qi = 0; qi < prims.size(); ++qi)
                    block.primitives.push_back(detail::parse_primitive(
                        prims[qi], static_cast<int>(qi),
                        bpath + ".primitives[" + std::to_string(qi) + "]"));
            }
            for (const auto& b : sheet.blocks)
                if (b.id == block.id)
                    throw SchemaError(bpath + ".id", "duplicate block id '" + block.id + "'");
            sheet.blocks.push_back(std::move(block));
        }
    }
    return sheet;
}

/// Reading order: page ascending, then top y, then left x.
inline void sort_reading_order(std::vector<Block>& blocks) {
    std::stable_sort(blocks.begin(), blocks.end(), [](const Block& a, const Block& b) {
        if (a.page != b.page) return a.page < b.page;
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        return a.bbox.x < b.bbox.x;
    });
}

}  // namespace flowgrade
