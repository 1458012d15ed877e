#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowgrade/errors.hpp"
#include "flowgrade/flowgraph.hpp"
#include "flowgrade/verdict.hpp"

namespace flowgrade {

/// Bag-of-words vector: lowercased, punctuation-stripped, whitespace-split.
using TokenVector = std::map<std::string, int>;

inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            // stripped
        } else {
            current += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    return tokens;
}

inline TokenVector token_vector(const std::string& text) {
    TokenVector v;
    for (const auto& t : tokenize(text)) v[t]++;
    return v;
}

/// Cosine of the angle between the two token-count vectors. Returns 0 when
/// either vector is empty; symmetric; 1.0 for equal nonempty texts.
inline double cosine_similarity(const std::string& a, const std::string& b) {
    const TokenVector va = token_vector(a);
    const TokenVector vb = token_vector(b);
    if (va.empty() || vb.empty()) return 0.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [tok, cnt] : va) {
        na += static_cast<double>(cnt) * cnt;
        if (auto it = vb.find(tok); it != vb.end()) dot += static_cast<double>(cnt) * it->second;
    }
    for (const auto& [tok, cnt] : vb) nb += static_cast<double>(cnt) * cnt;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct LevenshteinResult {
    int distance = 0;
    double similarity = 1.0;  // 1 - distance / max(|a|, |b|); 1.0 for two empty strings
};

/// Unit-cost edit distance over characters, two-row dynamic programming.
inline LevenshteinResult levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 && m == 0) return {0, 1.0};
    std::vector<int> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int cost = a[i - 1] == b[j - 1] ? 0 : 1;
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost});
        }
        std::swap(prev, cur);
    }
    const int d = prev[m];
    return {d, 1.0 - static_cast<double>(d) / static_cast<double>(std::max(n, m))};
}

/// Fraction of keywords present in the answer, where a keyword matches when
/// its normalized token sequence occurs contiguously in the normalized answer.
inline double keyword_coverage(const std::string& answer,
                               const std::set<std::string>& keywords) {
    if (keywords.empty()) throw EmptyKeywordSet();
    const std::vector<std::string> tokens = tokenize(answer);
    int hit = 0;
    for (const auto& kw : keywords) {
        const std::vector<std::string> phrase = tokenize(kw);
        if (phrase.empty()) continue;
        bool found = false;
        for (std::size_t i = 0; i + phrase.size() <= tokens.size() && !found; ++i) {
            found = std::equal(phrase.begin(), phrase.end(), tokens.begin() + i);
        }
        hit += found;
    }
    return static_cast<double>(hit) / static_cast<double>(keywords.size());
}

/// Synonym classes for edge labels; the first member of each class is the
/// canonical form. The default table covers the boolean pairs that make
/// hand-drawn decision branches differ without changing meaning.
struct SynonymTable {
    std::vector<std::vector<std::string>> classes = {
        {"yes", "true", "y", "t"},
        {"no", "false", "n", "f"},
    };
};

/// Lowercases and trims the label, then collapses it to the canonical member
/// of its synonym class. Labels outside every class pass through unchanged.
inline std::string normalize_label(const std::string& label,
                                   const SynonymTable& table = {}) {
    std::string s = label;
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const auto& cls : table.classes) {
        if (std::find(cls.begin(), cls.end(), s) != cls.end()) return cls.front();
    }
    return s;
}

struct GraphWeights {
    double type = 0.3;
    double edge = 0.4;
    double text = 0.3;
};

struct SimilarityScore {
    double value = 0.0;                      // weighted sum of components, in [0,1]
    std::map<std::string, double> components;  // "types", "edges", "text"
    bool approximate = false;                // greedy matching was used (> 8 nodes)
};

namespace detail {

struct IndexedGraph {
    std::vector<NodeKind> kinds;
    std::vector<std::string> texts;
    std::vector<std::tuple<int, int, std::string>> edges;  // from, to, normalized label
};

inline IndexedGraph index_graph(const FlowGraph& g, const SynonymTable& synonyms) {
    IndexedGraph ig;
    std::map<std::string, int> idx;
    for (const auto& n : g.nodes) {
        idx[n.id] = static_cast<int>(ig.kinds.size());
        ig.kinds.push_back(n.kind);
        ig.texts.push_back(n.text);
    }
    for (const auto& e : g.edges)
        ig.edges.emplace_back(idx.at(e.from), idx.at(e.to), normalize_label(e.label, synonyms));
    return ig;
}

// Score one injective mapping small->large. Components are normalized by the
// larger graph's node/edge counts so missing structure costs score.
inline void mapping_components(const IndexedGraph& small, const IndexedGraph& large,
                               const std::vector<int>& assign,
                               const std::vector<std::vector<double>>& text_sim,
                               double& type_c, double& edge_c, double& text_c) {
    const double max_nodes =
        static_cast<double>(std::max(small.kinds.size(), large.kinds.size()));
    int kind_hits = 0;
    double text_sum = 0.0;
    for (std::size_t i = 0; i < assign.size(); ++i) {
        kind_hits += small.kinds[i] == large.kinds[assign[i]];
        text_sum += text_sim[i][assign[i]];
    }
    const std::size_t max_edges = std::max(small.edges.size(), large.edges.size());
    int edge_hits = 0;
    for (const auto& [u, v, label] : small.edges) {
        const int mu = assign[u], mv = assign[v];
        for (const auto& [lu, lv, llabel] : large.edges) {
            if (lu == mu && lv == mv && llabel == label) {
                ++edge_hits;
                break;
            }
        }
    }
    type_c = kind_hits / max_nodes;
    edge_c = max_edges == 0 ? 1.0 : edge_hits / static_cast<double>(max_edges);
    text_c = text_sum / max_nodes;
}

}  // namespace detail

/// Structural similarity between two flowcharts: the best injective mapping
/// from the smaller node set into the larger, scored on matching node kinds,
/// preserved edges (labels compared after normalize_label), and node-text
/// cosine similarity. Exhaustive up to 8 nodes per graph; greedy above that,
/// with the result flagged approximate.
inline SimilarityScore graph_similarity(const FlowGraph& student, const FlowGraph& model,
                                        const GraphWeights& weights = {},
                                        const SynonymTable& synonyms = {}) {
    SimilarityScore result;
    const bool student_empty = student.nodes.empty();
    const bool model_empty = model.nodes.empty();
    if (student_empty && model_empty) {
        result.value = 1.0;
        result.components = {{"types", 1.0}, {"edges", 1.0}, {"text", 1.0}};
        return result;
    }
    if (student_empty || model_empty) {
        result.components = {{"types", 0.0}, {"edges", 0.0}, {"text", 0.0}};
        return result;
    }

    const detail::IndexedGraph a = detail::index_graph(student, synonyms);
    const detail::IndexedGraph b = detail::index_graph(model, synonyms);
    const bool swapped = a.kinds.size() > b.kinds.size();
    const detail::IndexedGraph& small = swapped ? b : a;
    const detail::IndexedGraph& large = swapped ? a : b;
    const std::size_t k = small.kinds.size();
    const std::size_t n = large.kinds.size();

    std::vector<std::vector<double>> text_sim(k, std::vector<double>(n));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j)
            text_sim[i][j] = cosine_similarity(small.texts[i], large.texts[j]);

    double best = -1.0;
    double best_type = 0.0, best_edge = 0.0, best_text = 0.0;
    auto consider = [&](const std::vector<int>& assign) {
        double tc, ec, xc;
        detail::mapping_components(small, large, assign, text_sim, tc, ec, xc);
        const double value = weights.type * tc + weights.edge * ec + weights.text * xc;
        if (value > best) {
            best = value;
            best_type = tc;
            best_edge = ec;
            best_text = xc;
        }
    };

    if (n <= 8) {
        std::vector<int> assign(k, -1);
        std::vector<bool> used(n, false);
        auto rec = [&](auto&& self, std::size_t i) -> void {
            if (i == k) {
                consider(assign);
                return;
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                used[j] = true;
                assign[i] = static_cast<int>(j);
                self(self, i + 1);
                used[j] = false;
            }
        };
        rec(rec, 0);
    } else {
        // Greedy seeding: best (kind match, text similarity) pairs first.
        result.approximate = true;
        struct Pair {
            double gain;
            std::size_t i, j;
        };
        std::vector<Pair> pairs;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < n; ++j)
                pairs.push_back({(small.kinds[i] == large.kinds[j] ? 1.0 : 0.0) + text_sim[i][j],
                                 i, j});
        std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
            if (x.gain != y.gain) return x.gain > y.gain;
            if (x.i != y.i) return x.i < y.i;
            return x.j < y.j;
        });
        std::vector<int> assign(k, -1);
        std::vector<bool> used(n, false);
        std::size_t assigned = 0;
        for (const auto& p : pairs) {
            if (assigned == k) break;
            if (assign[p.i] != -1 || used[p.j]) continue;
            assign[p.i] = static_cast<int>(p.j);
            used[p.j] = true;
            ++assigned;
        }
        consider(assign);
    }

    result.value = best;
    result.components = {{"types", best_type}, {"edges", best_edge}, {"text", best_text}};
    return result;
}

/// Rounds to the nearest multiple of `step` (exam-mark granularity).
inline double round_to_step(double value, double step = 0.5) {
    if (step <= 0) return value;
    return std::round(value / step) * step;
}

/// Offline text grader used as the mock-backend formula and as the fallback
/// when an LLM verdict cannot be parsed. With keywords the score blends
/// cosine similarity (0.6) and keyword coverage (0.4); without, it is cosine
/// alone. Scores round to the nearest 0.5 mark.
inline GradingVerdict deterministic_text_score(const std::string& student,
                                               const std::string& model,
                                               const std::optional<std::set<std::string>>& keywords,
                                               double max_marks) {
    const double cosine = cosine_similarity(student, model);
    double fraction = cosine;
    std::ostringstream why;
    why << "cosine similarity " << cosine;
    if (keywords && !keywords->empty()) {
        const double coverage = keyword_coverage(student, *keywords);
        fraction = 0.6 * cosine + 0.4 * coverage;
        why << ", keyword coverage " << coverage << " (0.6/0.4 blend)";
    }
    GradingVerdict v;
    v.max = max_marks;
    v.score = round_to_step(max_marks * fraction, 0.5);
    v.justification = why.str();
    v.backend = "deterministic";
    return v;
}

}  // namespace flowgrade
