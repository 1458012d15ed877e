#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flowgrade/detections.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/geometry.hpp"

namespace flowgrade {

enum class NodeKind { Start, Stop, Condition, Process };

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Start: return "Start";
        case NodeKind::Stop: return "Stop";
        case NodeKind::Condition: return "Condition";
        case NodeKind::Process: return "Process";
    }
    return "?";
}

inline std::optional<NodeKind> node_kind_from_string(const std::string& s) {
    if (s == "Start") return NodeKind::Start;
    if (s == "Stop") return NodeKind::Stop;
    if (s == "Condition") return NodeKind::Condition;
    if (s == "Process") return NodeKind::Process;
    return std::nullopt;
}

struct FlowNode {
    std::string id;
    NodeKind kind = NodeKind::Process;
    std::string text;
    BoundingBox bbox;
};

struct FlowEdge {
    std::string from;
    std::string to;
    std::string label;  // possibly empty; e.g. "yes"/"no"

    bool operator==(const FlowEdge&) const = default;
};

/// Reconstructed directed flowchart. Edge endpoints always reference existing
/// node ids; duplicate (from,to,label) triples are collapsed at build time.
struct FlowGraph {
    std::vector<FlowNode> nodes;
    std::vector<FlowEdge> edges;
    std::vector<Diagnostic> warnings;

    const FlowNode* find(const std::string& id) const {
        for (const auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
    int in_degree(const std::string& id) const {
        int d = 0;
        for (const auto& e : edges) d += (e.to == id);
        return d;
    }
    int out_degree(const std::string& id) const {
        int d = 0;
        for (const auto& e : edges) d += (e.from == id);
        return d;
    }
};

struct GraphConfig {
    double iou_threshold = 0.7;    // duplicate-block suppression
    double attach_epsilon = 12.0;  // px, arrow endpoint to block boundary
};

/// Removes duplicate same-class block detections. For any overlapping pair
/// (IoU >= threshold) the higher-confidence one survives; ties prefer larger
/// area, then smaller id. Arrows, arrowheads and text regions pass through
/// untouched.
inline std::vector<Primitive> dedup_blocks(const std::vector<Primitive>& prims,
                                           double iou_threshold = 0.7) {
    std::vector<const Primitive*> candidates;
    std::vector<Primitive> out;
    for (const auto& p : prims) {
        if (is_block_class(p.cls)) candidates.push_back(&p);
    }
    std::sort(candidates.begin(), candidates.end(), [](const Primitive* a, const Primitive* b) {
        if (a->confidence != b->confidence) return a->confidence > b->confidence;
        if (a->bbox.area() != b->bbox.area()) return a->bbox.area() > b->bbox.area();
        return a->id < b->id;
    });
    std::vector<const Primitive*> kept;
    for (const Primitive* c : candidates) {
        bool suppressed = false;
        for (const Primitive* k : kept) {
            if (k->cls == c->cls && iou(k->bbox, c->bbox) >= iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(c);
    }
    // Preserve input order among survivors.
    for (const auto& p : prims) {
        if (!is_block_class(p.cls)) {
            out.push_back(p);
        } else if (std::find(kept.begin(), kept.end(), &p) != kept.end()) {
            out.push_back(p);
        }
    }
    return out;
}

struct AttachResult {
    std::map<int, std::string> text_by_block;  // keyed by primitive id
    std::vector<TextFragment> leftovers;       // candidate edge labels
    std::vector<Diagnostic> warnings;
};

/// Assigns each fragment to the block whose bbox contains its center.
/// Fragments inside several blocks go to the smallest one (with a warning);
/// fragments inside none are returned as leftovers. Multi-fragment block text
/// is joined in reading order (top y, then left x) with single spaces.
inline AttachResult attach_text(const std::vector<Primitive>& blocks,
                                const std::vector<TextFragment>& frags) {
    AttachResult result;
    std::map<int, std::vector<const TextFragment*>> assigned;
    for (const auto& frag : frags) {
        const Point c = frag.bbox.center();
        const Primitive* best = nullptr;
        int hits = 0;
        for (const auto& b : blocks) {
            if (!is_block_class(b.cls)) continue;
            if (!b.bbox.contains(c)) continue;
            ++hits;
            if (!best || b.bbox.area() < best->bbox.area()) best = &b;
        }
        if (!best) {
            result.leftovers.push_back(frag);
            continue;
        }
        if (hits > 1)
            result.warnings.push_back({"AmbiguousFragment",
                                       "fragment '" + frag.text + "' lies inside " +
                                           std::to_string(hits) +
                                           " blocks; assigned to the smallest"});
        assigned[best->id].push_back(&frag);
    }
    for (auto& [id, parts] : assigned) {
        std::sort(parts.begin(), parts.end(), [](const TextFragment* a, const TextFragment* b) {
            if (a->bbox.y != b->bbox.y) return a->bbox.y < b->bbox.y;
            if (a->bbox.x != b->bbox.x) return a->bbox.x < b->bbox.x;
            return a->text < b->text;
        });
        std::string joined;
        for (const auto* f : parts) {
            if (!joined.empty()) joined += ' ';
            joined += f->text;
        }
        result.text_by_block[id] = joined;
    }
    return result;
}

struct ResolvedEdges {
    std::vector<FlowEdge> edges;  // from/to are block primitive ids as strings
    std::vector<Diagnostic> warnings;
};

namespace detail {

struct LabelCandidate {
    std::size_t arrow_idx;
    std::size_t frag_idx;
    double distance;
};

}  // namespace detail

/// Turns arrow primitives into directed edges. The head end of each arrow is
/// the polyline endpoint nearest an arrowhead center (last point when no
/// arrowheads exist); `to` is the block nearest the head within epsilon,
/// `from` the block nearest the tail. Leftover fragments within 2*epsilon of
/// a polyline become edge labels, each fragment used at most once, nearest
/// pairing first.
inline ResolvedEdges resolve_arrows(const std::vector<Primitive>& arrows,
                                    const std::vector<Primitive>& heads,
                                    const std::vector<Primitive>& blocks,
                                    const std::vector<TextFragment>& leftovers,
                                    double epsilon = 12.0) {
    ResolvedEdges result;

    auto nearest_block = [&](Point p) -> const Primitive* {
        const Primitive* best = nullptr;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& b : blocks) {
            if (!is_block_class(b.cls)) continue;
            const double d = distance_to_boundary(p, b.bbox);
            if (d <= epsilon && d < best_d) {
                best = &b;
                best_d = d;
            }
        }
        return best;
    };

    struct Pending {
        std::size_t arrow_idx;
        const Primitive* from;
        const Primitive* to;
        std::string label;
    };
    std::vector<Pending> pending;

    for (std::size_t ai = 0; ai < arrows.size(); ++ai) {
        const auto& arrow = arrows[ai];
        if (arrow.cls != PrimitiveClass::Arrow || arrow.polyline.size() < 2) continue;
        const Point first = arrow.polyline.front();
        const Point last = arrow.polyline.back();

        double d_first = std::numeric_limits<double>::infinity();
        double d_last = std::numeric_limits<double>::infinity();
        for (const auto& h : heads) {
            if (h.cls != PrimitiveClass::Arrowhead) continue;
            const Point c = h.bbox.center();
            d_first = std::min(d_first, std::hypot(first.x - c.x, first.y - c.y));
            d_last = std::min(d_last, std::hypot(last.x - c.x, last.y - c.y));
        }
        // Fallback: the polyline is ordered tail to head.
        const bool head_is_last = !(d_first < d_last);
        const Point head_pt = head_is_last ? last : first;
        const Point tail_pt = head_is_last ? first : last;

        const Primitive* to_block = nearest_block(head_pt);
        const Primitive* from_block = nearest_block(tail_pt);
        if (!to_block || !from_block) {
            result.warnings.push_back(
                {"UnattachedArrow", "arrow " + std::to_string(arrow.id) +
                                        " has no block within epsilon of its " +
                                        (to_block ? "tail" : "head") + " endpoint; dropped"});
            continue;
        }
        pending.push_back({ai, from_block, to_block, ""});
    }

    // Label assignment is global: all (arrow, fragment) pairs within 2*epsilon,
    // nearest first, so the outcome does not depend on input order.
    std::vector<detail::LabelCandidate> cands;
    for (std::size_t pi = 0; pi < pending.size(); ++pi) {
        const auto& arrow = arrows[pending[pi].arrow_idx];
        for (std::size_t fi = 0; fi < leftovers.size(); ++fi) {
            const double d = distance_to_polyline(leftovers[fi].bbox.center(), arrow.polyline);
            if (d <= 2 * epsilon) cands.push_back({pi, fi, d});
        }
    }
    std::sort(cands.begin(), cands.end(),
              [&](const detail::LabelCandidate& a, const detail::LabelCandidate& b) {
                  if (a.distance != b.distance) return a.distance < b.distance;
                  if (leftovers[a.frag_idx].text != leftovers[b.frag_idx].text)
                      return leftovers[a.frag_idx].text < leftovers[b.frag_idx].text;
                  const auto& ba = leftovers[a.frag_idx].bbox;
                  const auto& bb = leftovers[b.frag_idx].bbox;
                  if (ba.y != bb.y) return ba.y < bb.y;
                  return ba.x < bb.x;
              });
    std::set<std::size_t> used_frags, labeled_arrows;
    for (const auto& c : cands) {
        if (used_frags.count(c.frag_idx) || labeled_arrows.count(c.arrow_idx)) continue;
        pending[c.arrow_idx].label = leftovers[c.frag_idx].text;
        used_frags.insert(c.frag_idx);
        labeled_arrows.insert(c.arrow_idx);
    }

    for (const auto& p : pending) {
        if (p.from == p.to)
            result.warnings.push_back({"SelfLoop", "arrow " + std::to_string(arrows[p.arrow_idx].id) +
                                                       " loops block " + std::to_string(p.from->id) +
                                                       " back to itself"});
        result.edges.push_back(
            {std::to_string(p.from->id), std::to_string(p.to->id), p.label});
    }
    return result;
}

/// Maps a detected shape class plus connectivity to the flowchart node kind.
/// Terminators split into Start/Stop by degree; a terminator wired on both
/// sides is demoted to Process (callers emit the warning).
inline NodeKind classify_node_kind(PrimitiveClass cls, int in_degree, int out_degree) {
    switch (cls) {
        case PrimitiveClass::Decision: return NodeKind::Condition;
        case PrimitiveClass::Terminator:
            if (in_degree == 0) return NodeKind::Start;
            if (out_degree == 0) return NodeKind::Stop;
            return NodeKind::Process;
        default: return NodeKind::Process;
    }
}

/// Full reconstruction: dedup shapes, attach in-block text, resolve arrows,
/// classify node kinds, then validate (single Start, reachability, condition
/// arity). Warnings never abort; an input with no shape primitives at all
/// raises EmptyDiagram.
inline FlowGraph build_graph(const std::vector<Primitive>& prims,
                             const std::vector<TextFragment>& frags,
                             const GraphConfig& config = {}) {
    FlowGraph graph;

    const std::vector<Primitive> deduped = dedup_blocks(prims, config.iou_threshold);
    std::vector<Primitive> blocks, arrows, heads;
    for (const auto& p : deduped) {
        if (is_block_class(p.cls)) blocks.push_back(p);
        else if (p.cls == PrimitiveClass::Arrow) arrows.push_back(p);
        else if (p.cls == PrimitiveClass::Arrowhead) heads.push_back(p);
    }
    if (blocks.empty()) throw EmptyDiagram();

    AttachResult attached = attach_text(blocks, frags);
    graph.warnings.insert(graph.warnings.end(), attached.warnings.begin(),
                          attached.warnings.end());

    ResolvedEdges resolved =
        resolve_arrows(arrows, heads, blocks, attached.leftovers, config.attach_epsilon);
    graph.warnings.insert(graph.warnings.end(), resolved.warnings.begin(),
                          resolved.warnings.end());

    // Collapse duplicate (from, to, label) triples.
    std::vector<FlowEdge> edges;
    for (const auto& e : resolved.edges) {
        if (std::find(edges.begin(), edges.end(), e) != edges.end()) {
            graph.warnings.push_back(
                {"DuplicateEdge", "duplicate edge " + e.from + "->" + e.to +
                                      (e.label.empty() ? "" : " (" + e.label + ")") + " collapsed"});
            continue;
        }
        edges.push_back(e);
    }
    graph.edges = std::move(edges);

    std::map<std::string, std::pair<int, int>> degree;  // id -> (in, out)
    for (const auto& b : blocks) degree[std::to_string(b.id)] = {0, 0};
    for (const auto& e : graph.edges) {
        degree[e.from].second++;
        degree[e.to].first++;
    }

    for (const auto& b : blocks) {
        const std::string id = std::to_string(b.id);
        const auto [in_d, out_d] = degree[id];
        const NodeKind kind = classify_node_kind(b.cls, in_d, out_d);
        if (b.cls == PrimitiveClass::Terminator && in_d > 0 && out_d > 0)
            graph.warnings.push_back({"TerminatorInFlow",
                                      "terminator block " + id +
                                          " has both incoming and outgoing edges; treated as Process"});
        std::string text;
        if (auto it = attached.text_by_block.find(b.id); it != attached.text_by_block.end())
            text = it->second;
        graph.nodes.push_back({id, kind, text, b.bbox});
    }

    // Validation. All findings are warnings; grading proceeds regardless.
    std::vector<const FlowNode*> starts;
    for (const auto& n : graph.nodes)
        if (n.kind == NodeKind::Start) starts.push_back(&n);
    if (starts.empty()) {
        graph.warnings.push_back({"NoStart", "diagram has no Start node"});
    } else if (starts.size() > 1) {
        graph.warnings.push_back(
            {"MultipleStart", "diagram has " + std::to_string(starts.size()) + " Start nodes"});
    }
    if (!starts.empty()) {
        std::set<std::string> reachable;
        std::vector<std::string> frontier;
        for (const auto* s : starts) {
            reachable.insert(s->id);
            frontier.push_back(s->id);
        }
        while (!frontier.empty()) {
            const std::string u = frontier.back();
            frontier.pop_back();
            for (const auto& e : graph.edges)
                if (e.from == u && reachable.insert(e.to).second) frontier.push_back(e.to);
        }
        for (const auto& n : graph.nodes)
            if (!reachable.count(n.id))
                graph.warnings.push_back(
                    {"UnreachableNode", "node " + n.id + " is not reachable from Start"});
    }
    for (const auto& n : graph.nodes) {
        if (n.kind != NodeKind::Condition) continue;
        const int out_d = graph.out_degree(n.id);
        if (out_d != 2)
            graph.warnings.push_back({"ConditionArity",
                                      "condition node " + n.id + " has out-degree " +
                                          std::to_string(out_d) + " (expected 2)"});
    }
    return graph;
}

}  // namespace flowgrade
