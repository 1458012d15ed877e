#pragma once

// Test-only oracles and fixture builders. Oracles are written independently
// of the library code paths they check: inclusion-exclusion and Monte-Carlo
// areas, full-matrix edit distance, next_permutation-based graph matching,
// and a brute-force line-clustering closure.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "flowgrade/flowgrade.hpp"

namespace testsupport {

using flowgrade::BoundingBox;
using flowgrade::FlowEdge;
using flowgrade::FlowGraph;
using flowgrade::FlowNode;
using flowgrade::NodeKind;
using flowgrade::Point;
using flowgrade::Primitive;
using flowgrade::PrimitiveClass;
using flowgrade::TextFragment;

// ---------------------------------------------------------------------------
// Rectangle-union oracles

inline double union_area_inclusion_exclusion(const std::vector<BoundingBox>& boxes) {
    const std::size_t n = boxes.size();
    double total = 0.0;
    for (std::size_t mask = 1; mask < (1u << n); ++mask) {
        double x0 = -1e18, y0 = -1e18, x1 = 1e18, y1 = 1e18;
        int bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(mask & (1u << i))) continue;
            ++bits;
            x0 = std::max(x0, boxes[i].x);
            y0 = std::max(y0, boxes[i].y);
            x1 = std::min(x1, boxes[i].right());
            y1 = std::min(y1, boxes[i].bottom());
        }
        const double area = (x1 > x0 && y1 > y0) ? (x1 - x0) * (y1 - y0) : 0.0;
        total += (bits % 2 == 1) ? area : -area;
    }
    return total;
}

inline double union_area_monte_carlo(const std::vector<BoundingBox>& boxes, int samples,
                                     unsigned seed) {
    if (boxes.empty()) return 0.0;
    double x0 = 1e18, y0 = 1e18, x1 = -1e18, y1 = -1e18;
    for (const auto& b : boxes) {
        x0 = std::min(x0, b.x);
        y0 = std::min(y0, b.y);
        x1 = std::max(x1, b.right());
        y1 = std::max(y1, b.bottom());
    }
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dx(x0, x1), dy(y0, y1);
    int inside = 0;
    for (int s = 0; s < samples; ++s) {
        const double px = dx(rng), py = dy(rng);
        for (const auto& b : boxes) {
            if (px >= b.x && px <= b.right() && py >= b.y && py <= b.bottom()) {
                ++inside;
                break;
            }
        }
    }
    return (x1 - x0) * (y1 - y0) * inside / static_cast<double>(samples);
}

// ---------------------------------------------------------------------------
// Edit-distance oracle (full matrix)

inline int levenshtein_reference(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[n][m];
}

// ---------------------------------------------------------------------------
// Exhaustive-bijection graph-similarity oracle (default weights and the
// default yes/no synonym pairs), enumerated with std::next_permutation.

inline std::vector<std::string> oracle_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        }
        // punctuation dropped
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double oracle_cosine(const std::string& a, const std::string& b) {
    std::map<std::string, int> va, vb;
    for (const auto& t : oracle_tokens(a)) va[t]++;
    for (const auto& t : oracle_tokens(b)) vb[t]++;
    if (va.empty() || vb.empty()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (const auto& [t, c] : va) na += double(c) * c;
    for (const auto& [t, c] : vb) nb += double(c) * c;
    for (const auto& [t, c] : va)
        if (vb.count(t)) dot += double(c) * vb.at(t);
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline std::string oracle_label(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "yes" || s == "true" || s == "y" || s == "t") return "yes";
    if (s == "no" || s == "false" || s == "n" || s == "f") return "no";
    return s;
}

inline double graph_similarity_oracle(const FlowGraph& ga, const FlowGraph& gb) {
    if (ga.nodes.empty() && gb.nodes.empty()) return 1.0;
    if (ga.nodes.empty() || gb.nodes.empty()) return 0.0;
    const FlowGraph& small = ga.nodes.size() <= gb.nodes.size() ? ga : gb;
    const FlowGraph& large = ga.nodes.size() <= gb.nodes.size() ? gb : ga;
    const std::size_t k = small.nodes.size();
    const std::size_t n = large.nodes.size();
    const double max_nodes = static_cast<double>(n);

    struct OEdge {
        int u, v;
        std::string label;
    };
    auto edges_of = [](const FlowGraph& g) {
        std::map<std::string, int> idx;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) idx[g.nodes[i].id] = int(i);
        std::vector<OEdge> out;
        for (const auto& e : g.edges) out.push_back({idx.at(e.from), idx.at(e.to), oracle_label(e.label)});
        return out;
    };
    const auto se = edges_of(small);
    const auto le = edges_of(large);
    const double max_edges = static_cast<double>(std::max(se.size(), le.size()));

    std::vector<std::vector<double>> text_sim(k, std::vector<double>(n));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j)
            text_sim[i][j] = oracle_cosine(small.nodes[i].text, large.nodes[j].text);

    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    double best = 0.0;
    // Every ordered choice of k targets out of n = permutations of the pool,
    // reading the first k entries. Deduplication is unnecessary for a max.
    do {
        int kinds = 0;
        double textsum = 0;
        for (std::size_t i = 0; i < k; ++i) {
            kinds += small.nodes[i].kind == large.nodes[pool[i]].kind;
            textsum += text_sim[i][pool[i]];
        }
        int hits = 0;
        for (const auto& e : se) {
            for (const auto& f : le) {
                if (f.u == pool[e.u] && f.v == pool[e.v] && f.label == e.label) {
                    ++hits;
                    break;
                }
            }
        }
        const double edge_c = max_edges == 0 ? 1.0 : hits / max_edges;
        const double value = 0.3 * (kinds / max_nodes) + 0.4 * edge_c + 0.3 * (textsum / max_nodes);
        best = std::max(best, value);
    } while (std::next_permutation(pool.begin(), pool.end()));
    return best;
}

// ---------------------------------------------------------------------------
// Line-clustering oracle: repeated-pass transitive closure over the >= 50%
// vertical-overlap relation, groups keyed by their topmost member.

inline std::vector<std::vector<int>> line_groups_oracle(const std::vector<TextFragment>& words) {
    const int n = static_cast<int>(words.size());
    std::vector<int> group(n);
    std::iota(group.begin(), group.end(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto& a = words[i].bbox;
                const auto& b = words[j].bbox;
                const double overlap = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
                if (overlap >= 0.5 * std::min(a.h, b.h) && group[i] != group[j]) {
                    const int g = std::min(group[i], group[j]);
                    group[i] = group[j] = g;
                    changed = true;
                }
            }
        }
    }
    std::map<int, std::vector<int>> by_group;
    for (int i = 0; i < n; ++i) by_group[group[i]].push_back(i);
    std::vector<std::vector<int>> out;
    for (auto& [g, members] : by_group) out.push_back(members);
    return out;
}

// ---------------------------------------------------------------------------
// Graph isomorphism check (exact, brute force; fine for <= 8 nodes)

inline bool isomorphic(const FlowGraph& a, const FlowGraph& b) {
    if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
    const std::size_t n = a.nodes.size();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    auto edge_key = [](const FlowGraph& g, const std::map<std::string, int>& idx,
                       const std::vector<int>* map) {
        std::multiset<std::tuple<int, int, std::string>> keys;
        for (const auto& e : g.edges) {
            int u = idx.at(e.from), v = idx.at(e.to);
            if (map) {
                u = (*map)[u];
                v = (*map)[v];
            }
            keys.insert({u, v, e.label});
        }
        return keys;
    };
    std::map<std::string, int> ia, ib;
    for (std::size_t i = 0; i < n; ++i) ia[a.nodes[i].id] = int(i);
    for (std::size_t i = 0; i < n; ++i) ib[b.nodes[i].id] = int(i);
    const auto kb = edge_key(b, ib, nullptr);
    do {
        bool nodes_ok = true;
        for (std::size_t i = 0; i < n && nodes_ok; ++i) {
            nodes_ok = a.nodes[i].kind == b.nodes[perm[i]].kind &&
                       a.nodes[i].text == b.nodes[perm[i]].text;
        }
        if (!nodes_ok) continue;
        if (edge_key(a, ia, &perm) == kb) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// ---------------------------------------------------------------------------
// Fixture builders

inline Primitive shape(int id, PrimitiveClass cls, double x, double y, double w, double h,
                       double confidence = 0.95) {
    return {id, cls, {x, y, w, h}, confidence, {}};
}

inline Primitive arrow_prim(int id, Point tail, Point head) {
    Primitive p{id, PrimitiveClass::Arrow, {}, 0.9, {tail, head}};
    p.bbox = {std::min(tail.x, head.x), std::min(tail.y, head.y),
              std::max(1.0, std::abs(head.x - tail.x)),
              std::max(1.0, std::abs(head.y - tail.y))};
    return p;
}

inline Primitive arrowhead_prim(int id, Point at) {
    return {id, PrimitiveClass::Arrowhead, {at.x - 4, at.y - 4, 8, 8}, 0.9, {}};
}

inline TextFragment word(const std::string& text, double x, double y, double w = 60,
                         double h = 16, double confidence = 0.99) {
    return {{x, y, w, h}, text, confidence};
}

inline Point rect_point_toward(const BoundingBox& r, Point target) {
    return {std::clamp(target.x, r.x, r.right()), std::clamp(target.y, r.y, r.bottom())};
}

/// Start -> Process("push item") -> Stop chain, same layout as the fixture
/// sheet's diagram block.
inline std::pair<std::vector<Primitive>, std::vector<TextFragment>> chain_fixture() {
    std::vector<Primitive> prims = {
        shape(0, PrimitiveClass::Terminator, 160, 150, 140, 44),
        shape(1, PrimitiveClass::Process, 160, 250, 140, 44),
        shape(2, PrimitiveClass::Terminator, 160, 350, 140, 44),
        arrow_prim(3, {230, 194}, {230, 250}),
        arrowhead_prim(4, {230, 248}),
        arrow_prim(5, {230, 294}, {230, 350}),
        arrowhead_prim(6, {230, 348}),
    };
    std::vector<TextFragment> frags = {
        word("start", 200, 160, 60, 20),
        word("push", 190, 260, 40, 20),
        word("item", 238, 260, 40, 20),
        word("stop", 202, 360, 56, 20),
    };
    return {prims, frags};
}

struct ChartSpec {
    std::vector<FlowNode> nodes;  // bbox used for layout
    std::vector<FlowEdge> edges;  // from/to are node indices as strings
};

/// Random flowchart layout: chain plus extra decision branches, nodes on a
/// jittered grid. `boolean_labels` picks the yes/no wording for branch labels.
inline ChartSpec random_chart(std::mt19937& rng, int n_nodes, bool use_true_false = false) {
    static const std::vector<std::string> vocab = {
        "read n",  "sum = 0",   "i = 1",     "print sum", "count items",
        "n < 10",  "push item", "pop item",  "is empty",  "total = total + i",
        "output",  "find max",  "swap a b",  "check flag", "load data",
    };
    ChartSpec spec;
    std::uniform_real_distribution<double> jitter(0.0, 30.0);
    std::uniform_int_distribution<int> pick_text(0, int(vocab.size()) - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    for (int i = 0; i < n_nodes; ++i) {
        FlowNode node;
        node.id = std::to_string(i);
        const int col = i % 3, row = i / 3;
        node.bbox = {col * 260.0 + jitter(rng), row * 170.0 + jitter(rng), 130.0 + jitter(rng),
                     46.0 + jitter(rng) / 3.0};
        if (i == 0) {
            node.kind = NodeKind::Start;
            node.text = "start";
        } else if (i == n_nodes - 1) {
            node.kind = NodeKind::Stop;
            node.text = "stop";
        } else if (coin(rng) < 0.35) {
            node.kind = NodeKind::Condition;
            node.text = vocab[pick_text(rng)];
        } else {
            node.kind = NodeKind::Process;
            node.text = vocab[pick_text(rng)];
        }
        spec.nodes.push_back(node);
    }
    const std::string yes = use_true_false ? "true" : "yes";
    const std::string no = use_true_false ? "false" : "no";
    for (int i = 0; i + 1 < n_nodes; ++i) {
        const bool from_condition = spec.nodes[i].kind == NodeKind::Condition;
        spec.edges.push_back({std::to_string(i), std::to_string(i + 1),
                              from_condition ? yes : std::string{}});
        if (from_condition) {
            std::uniform_int_distribution<int> pick_target(0, n_nodes - 1);
            int target = pick_target(rng);
            while (target == i || target == i + 1) target = pick_target(rng);
            spec.edges.push_back({std::to_string(i), std::to_string(target), no});
        }
    }
    return spec;
}

inline FlowGraph graph_from_spec(const ChartSpec& spec) {
    FlowGraph g;
    g.nodes = spec.nodes;
    g.edges = spec.edges;
    return g;
}

/// Renders a chart spec into detector primitives: shapes, center text,
/// arrows between block boundaries, arrowheads, and loose label fragments.
inline std::pair<std::vector<Primitive>, std::vector<TextFragment>> primitives_from_spec(
    const ChartSpec& spec) {
    std::vector<Primitive> prims;
    std::vector<TextFragment> frags;
    int next_id = 0;
    for (const auto& node : spec.nodes) {
        PrimitiveClass cls = PrimitiveClass::Process;
        if (node.kind == NodeKind::Start || node.kind == NodeKind::Stop)
            cls = PrimitiveClass::Terminator;
        else if (node.kind == NodeKind::Condition)
            cls = PrimitiveClass::Decision;
        prims.push_back(shape(next_id++, cls, node.bbox.x, node.bbox.y, node.bbox.w, node.bbox.h));
        const Point c = node.bbox.center();
        frags.push_back(word(node.text, c.x - 30, c.y - 8, 60, 16));
    }
    for (const auto& edge : spec.edges) {
        const auto& a = spec.nodes[std::stoul(edge.from)].bbox;
        const auto& b = spec.nodes[std::stoul(edge.to)].bbox;
        const Point tail = rect_point_toward(a, b.center());
        const Point head = rect_point_toward(b, tail);
        prims.push_back(arrow_prim(next_id++, tail, head));
        prims.push_back(arrowhead_prim(next_id++, head));
        if (!edge.label.empty()) {
            double t = 0.3;
            Point at{tail.x + t * (head.x - tail.x), tail.y + t * (head.y - tail.y)};
            auto inside_any = [&](Point p) {
                for (const auto& node : spec.nodes)
                    if (node.bbox.contains(p)) return true;
                return false;
            };
            if (inside_any(at)) {
                t = 0.5;
                at = {tail.x + t * (head.x - tail.x), tail.y + t * (head.y - tail.y)};
            }
            if (!inside_any(at)) frags.push_back(word(edge.label, at.x - 7, at.y - 5, 14, 10));
        }
    }
    return {prims, frags};
}

inline std::string fixture_path(const std::string& name) {
    return std::string(FLOWGRADE_FIXTURE_DIR) + "/" + name;
}

}  // namespace testsupport
