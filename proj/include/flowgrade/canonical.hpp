#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flowgrade/errors.hpp"
#include "flowgrade/flowgraph.hpp"

namespace flowgrade {

namespace detail {

// Intrinsic node order used for canonical tie-breaking. Deliberately ignores
// node ids so renaming detector ids cannot change the serialization.
inline bool canonical_tie_less(const FlowNode& a, const FlowNode& b) {
    if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
    if (a.bbox.x != b.bbox.x) return a.bbox.x < b.bbox.x;
    if (a.bbox.w != b.bbox.w) return a.bbox.w < b.bbox.w;
    if (a.bbox.h != b.bbox.h) return a.bbox.h < b.bbox.h;
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.text < b.text;
}

/// Canonical node order: breadth-first from the Start node (nodes within a
/// level sorted top-to-bottom, left-to-right), then any remaining nodes as
/// fresh BFS roots in the same geometric order.
inline std::vector<std::size_t> canonical_order(const FlowGraph& g,
                                                std::vector<Diagnostic>* warnings) {
    const std::size_t n = g.nodes.size();
    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> visited(n, false);

    std::map<std::string, std::size_t> index_of;
    for (std::size_t i = 0; i < n; ++i) index_of[g.nodes[i].id] = i;

    auto geo_sort = [&](std::vector<std::size_t>& idx) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return canonical_tie_less(g.nodes[a], g.nodes[b]);
        });
    };

    auto pick_root = [&]() -> std::size_t {
        std::vector<std::size_t> starts, rest;
        for (std::size_t i = 0; i < n; ++i) {
            if (visited[i]) continue;
            (g.nodes[i].kind == NodeKind::Start ? starts : rest).push_back(i);
        }
        if (!starts.empty()) {
            geo_sort(starts);
            return starts.front();
        }
        geo_sort(rest);
        return rest.front();
    };

    bool first_component = true;
    while (order.size() < n) {
        if (first_component) {
            bool any_start = false;
            for (std::size_t i = 0; i < n; ++i) any_start |= g.nodes[i].kind == NodeKind::Start;
            if (!any_start && warnings)
                warnings->push_back({"NoStartNode",
                                     "no Start node to anchor canonical order; "
                                     "using the topmost-leftmost node as root"});
            first_component = false;
        }
        std::vector<std::size_t> level{pick_root()};
        visited[level.front()] = true;
        while (!level.empty()) {
            for (std::size_t i : level) order.push_back(i);
            std::vector<std::size_t> next;
            for (std::size_t u : level) {
                for (const auto& e : g.edges) {
                    if (e.from != g.nodes[u].id) continue;
                    const std::size_t v = index_of.at(e.to);
                    if (!visited[v]) {
                        visited[v] = true;
                        next.push_back(v);
                    }
                }
            }
            geo_sort(next);
            level = std::move(next);
        }
    }
    return order;
}

}  // namespace detail

/// Serializes a graph to its canonical textual representation: one record per
/// node in canonical order, six fields per record (one per line), records
/// separated by a blank line. Canonical ids B1, B2, ... replace the original
/// detector ids, so equal graphs serialize to byte-identical text regardless
/// of input ordering or id naming. Unlabeled Condition out-edges carry the
/// placeholder label "?".
inline std::string serialize(const FlowGraph& graph,
                             std::vector<Diagnostic>* warnings = nullptr) {
    if (graph.nodes.empty()) return "";

    const std::vector<std::size_t> order = detail::canonical_order(graph, warnings);
    std::map<std::string, std::size_t> rank;  // node id -> canonical rank (0-based)
    for (std::size_t r = 0; r < order.size(); ++r) rank[graph.nodes[order[r]].id] = r;

    auto canon_id = [](std::size_t r) { return "B" + std::to_string(r + 1); };

    std::ostringstream out;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const FlowNode& node = graph.nodes[order[r]];

        std::vector<std::size_t> prev;
        struct NextRef {
            std::size_t rank;
            std::string label;
        };
        std::vector<NextRef> next;
        int incidences = 0;
        for (const auto& e : graph.edges) {
            if (e.to == node.id) {
                prev.push_back(rank.at(e.from));
                ++incidences;
            }
            if (e.from == node.id) {
                std::string label = e.label;
                if (label.empty() && node.kind == NodeKind::Condition) label = "?";
                next.push_back({rank.at(e.to), label});
                ++incidences;
            }
        }
        std::sort(prev.begin(), prev.end());
        std::sort(next.begin(), next.end(), [](const NextRef& a, const NextRef& b) {
            if (a.rank != b.rank) return a.rank < b.rank;
            return a.label < b.label;
        });

        if (r > 0) out << "\n";
        out << canon_id(r) << "\n";
        out << "neighbors=" << incidences << "\n";
        out << "prev=";
        if (prev.empty()) {
            out << "none";
        } else {
            for (std::size_t i = 0; i < prev.size(); ++i)
                out << (i ? "," : "") << canon_id(prev[i]);
        }
        out << "\n";
        out << "next=";
        if (next.empty()) {
            out << "none";
        } else {
            for (std::size_t i = 0; i < next.size(); ++i) {
                out << (i ? "," : "") << canon_id(next[i].rank);
                if (!next[i].label.empty()) out << "(" << next[i].label << ")";
            }
        }
        out << "\n";
        out << "type=" << to_string(node.kind) << "\n";
        out << "text=" << node.text << "\n";
    }
    return out.str();
}

/// Parses canonical text back into a FlowGraph. Node bboxes are synthesized
/// from record order (the text format carries no geometry); the "?" label
/// placeholder maps back to the empty label. Used by the mock diagram grader
/// and by round-trip checks.
inline FlowGraph parse_canonical(const std::string& text) {
    FlowGraph graph;
    if (text.empty()) return graph;

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> current;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            if (!current.empty()) records.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(line);
        }
    }
    if (!current.empty()) records.push_back(std::move(current));

    auto field = [](const std::string& l, const std::string& prefix,
                    const std::string& where) -> std::string {
        if (l.rfind(prefix, 0) != 0)
            throw SchemaError(where, "expected '" + prefix + "...', got '" + l + "'");
        return l.substr(prefix.size());
    };

    struct Pending {
        std::string from;
        std::string next_field;
    };
    std::vector<Pending> pendings;

    for (std::size_t ri = 0; ri < records.size(); ++ri) {
        const auto& rec = records[ri];
        const std::string where = "record[" + std::to_string(ri) + "]";
        if (rec.size() != 6)
            throw SchemaError(where, "expected 6 lines, got " + std::to_string(rec.size()));
        FlowNode node;
        node.id = rec[0];
        field(rec[1], "neighbors=", where);  // recomputed from edges, kept for validation
        field(rec[2], "prev=", where);
        const std::string next = field(rec[3], "next=", where);
        const std::string type = field(rec[4], "type=", where);
        node.text = field(rec[5], "text=", where);
        const auto kind = node_kind_from_string(type);
        if (!kind) throw SchemaError(where + ".type", "unknown node type '" + type + "'");
        node.kind = *kind;
        node.bbox = {0.0, static_cast<double>(ri) * 10.0, 10.0, 10.0};
        graph.nodes.push_back(node);
        if (next != "none") pendings.push_back({node.id, next});
    }

    for (const auto& p : pendings) {
        std::string entry;
        std::istringstream es(p.next_field);
        while (std::getline(es, entry, ',')) {
            std::string to = entry;
            std::string label;
            const auto paren = entry.find('(');
            if (paren != std::string::npos && entry.back() == ')') {
                to = entry.substr(0, paren);
                label = entry.substr(paren + 1, entry.size() - paren - 2);
                if (label == "?") label.clear();
            }
            if (!graph.find(to))
                throw SchemaError("next", "edge target '" + to + "' is not a known record");
            graph.edges.push_back({p.from, to, label});
        }
    }
    return graph;
}

}  // namespace flowgrade
