#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "flowgrade/detections.hpp"
#include "flowgrade/errors.hpp"
#include "flowgrade/flowgraph.hpp"
#include "flowgrade/geometry.hpp"

namespace flowgrade {

/// Ratio of the exact union area of the text boxes (clipped to the block) to
/// the block area. Overlapping word boxes are counted once.
inline double text_area_ratio(const BoundingBox& block_bbox,
                              const std::vector<BoundingBox>& text_boxes) {
    if (block_bbox.area() <= 0) throw DegenerateBlock();
    std::vector<BoundingBox> clipped;
    clipped.reserve(text_boxes.size());
    for (const auto& b : text_boxes) clipped.push_back(clip(b, block_bbox));
    return union_area(clipped) / block_bbox.area();
}

/// Text-area-density block classifier: Text iff the textual region covers at
/// least `threshold` of the block.
inline BlockKind classify_block(const BoundingBox& block_bbox,
                                const std::vector<BoundingBox>& text_boxes,
                                double threshold = 0.5) {
    return text_area_ratio(block_bbox, text_boxes) >= threshold ? BlockKind::Text
                                                                : BlockKind::Diagram;
}

/// A segmented text line: member words ordered left to right, bbox the tight
/// union of the word boxes (no leading or trailing blank margin).
struct Line {
    BoundingBox bbox;
    std::vector<TextFragment> words;
    std::string text;  // words joined with single spaces
};

/// Groups words into lines: words whose vertical extents overlap by at least
/// half of the smaller height share a line (transitive closure). Lines come
/// out top to bottom; the result is invariant under input permutation.
inline std::vector<Line> segment_lines(const std::vector<TextFragment>& words) {
    const std::size_t n = words.size();
    if (n == 0) return {};

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = words[i].bbox;
            const auto& b = words[j].bbox;
            const double overlap = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
            if (overlap >= 0.5 * std::min(a.h, b.h)) unite(i, j);
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

    std::vector<Line> lines;
    for (auto& [root, members] : groups) {
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            if (words[a].bbox.x != words[b].bbox.x) return words[a].bbox.x < words[b].bbox.x;
            if (words[a].bbox.y != words[b].bbox.y) return words[a].bbox.y < words[b].bbox.y;
            return words[a].text < words[b].text;
        });
        Line line;
        line.bbox = words[members.front()].bbox;
        for (std::size_t idx : members) {
            line.bbox = bbox_union(line.bbox, words[idx].bbox);
            line.words.push_back(words[idx]);
            if (!line.text.empty()) line.text += ' ';
            line.text += words[idx].text;
        }
        lines.push_back(std::move(line));
    }
    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        return a.bbox.x < b.bbox.x;
    });
    return lines;
}

enum class Source { Student, ModelKey };

/// Everything extracted for one question: the answer's text lines plus any
/// reconstructed flowcharts, in reading order.
struct QuestionBundle {
    std::string question_id;
    std::vector<Line> answer_text;
    std::vector<FlowGraph> diagrams;
    Source source = Source::Student;
};

/// Identifier used when content precedes the first question anchor.
inline constexpr const char* kUnassignedQuestion = "unassigned";

/// Page region a question's answer is expected to occupy (manifest policy).
struct ManifestRegion {
    std::string question_id;
    int page = 0;
    BoundingBox region;
};

struct AnchorPolicy {
    enum class Kind { Regex, Manifest };
    Kind kind = Kind::Regex;
    std::vector<ManifestRegion> regions;  // manifest policy only
};

struct IngestConfig {
    double density_threshold = 0.5;
    double low_confidence = 0.35;  // fragments below this are kept but flagged
    AnchorPolicy anchor;
    GraphConfig graph;
};

struct IngestResult {
    std::map<std::string, QuestionBundle> bundles;
    std::vector<Diagnostic> warnings;               // sheet-level
    std::map<std::string, std::vector<Diagnostic>> question_warnings;
};

namespace detail {

// Question anchors look like "Q1.", "1)", "3]" at the start of a line.
inline const std::regex& anchor_regex() {
    static const std::regex re(R"(^Q?\s*([0-9]+)[).\]])");
    return re;
}

inline std::optional<std::string> match_anchor(const std::string& line_text) {
    std::smatch m;
    if (std::regex_search(line_text, m, anchor_regex()))
        return "Q" + std::to_string(std::stol(m[1].str()));
    return std::nullopt;
}

inline std::optional<std::string> manifest_lookup(const std::vector<ManifestRegion>& regions,
                                                  const Block& block) {
    const Point c = block.bbox.center();
    for (const auto& r : regions)
        if (r.page == block.page && r.region.contains(c)) return r.question_id;
    return std::nullopt;
}

}  // namespace detail

/// Applies density classification to every block that carries no explicit
/// kind hint. Blocks with shape primitives are diagrams by construction.
inline void classify_blocks(std::vector<Block>& blocks, double threshold = 0.5) {
    for (auto& block : blocks) {
        if (!block.primitives.empty()) {
            block.kind = BlockKind::Diagram;
            continue;
        }
        if (block.kind_hint) {
            block.kind = *block.kind_hint;
            continue;
        }
        std::vector<BoundingBox> boxes;
        boxes.reserve(block.words.size());
        for (const auto& w : block.words) boxes.push_back(w.bbox);
        block.kind = classify_block(block.bbox, boxes, threshold);
    }
}

/// Partitions blocks into question bundles. With the regex policy a line that
/// matches the anchor pattern opens a new question and every following line
/// or diagram belongs to it until the next anchor; with the manifest policy
/// blocks map to the declared page region containing their center. Content
/// before any anchor lands under "unassigned" with a warning.
inline IngestResult map_to_questions(const std::vector<Block>& blocks,
                                     const IngestConfig& config = {},
                                     Source source = Source::Student) {
    IngestResult result;
    std::string current = kUnassignedQuestion;

    auto bundle_for = [&](const std::string& qid) -> QuestionBundle& {
        auto [it, inserted] = result.bundles.try_emplace(qid);
        if (inserted) {
            it->second.question_id = qid;
            it->second.source = source;
        }
        return it->second;
    };

    auto note_unanchored = [&](const Block& block) {
        if (current != kUnassignedQuestion) return;
        result.warnings.push_back({"UnanchoredBlock",
                                   "block '" + block.id +
                                       "' precedes the first question anchor; "
                                       "collected under 'unassigned'"});
    };

    for (const auto& block : blocks) {
        if (config.anchor.kind == AnchorPolicy::Kind::Manifest) {
            if (auto qid = detail::manifest_lookup(config.anchor.regions, block))
                current = *qid;
            else
                current = kUnassignedQuestion;
        }

        if (block.kind == BlockKind::Diagram) {
            if (config.anchor.kind == AnchorPolicy::Kind::Regex) note_unanchored(block);
            else if (current == kUnassignedQuestion)
                result.warnings.push_back({"UnanchoredBlock",
                                           "block '" + block.id +
                                               "' matches no manifest region; "
                                               "collected under 'unassigned'"});
            QuestionBundle& bundle = bundle_for(current);
            try {
                FlowGraph g = build_graph(block.primitives, block.words, config.graph);
                for (const auto& w : g.warnings)
                    result.question_warnings[current].push_back(w);
                bundle.diagrams.push_back(std::move(g));
            } catch (const EmptyDiagram&) {
                result.question_warnings[current].push_back(
                    {"EmptyDiagram", "diagram block '" + block.id +
                                         "' contains no usable shape primitives; skipped"});
            }
            continue;
        }

        const std::vector<Line> lines = segment_lines(block.words);
        bool block_noted = false;
        for (const auto& line : lines) {
            if (config.anchor.kind == AnchorPolicy::Kind::Regex) {
                if (auto qid = detail::match_anchor(line.text)) current = *qid;
                if (current == kUnassignedQuestion && !block_noted) {
                    note_unanchored(block);
                    block_noted = true;
                }
            } else if (current == kUnassignedQuestion && !block_noted) {
                result.warnings.push_back({"UnanchoredBlock",
                                           "block '" + block.id +
                                               "' matches no manifest region; "
                                               "collected under 'unassigned'"});
                block_noted = true;
            }
            for (const auto& w : line.words) {
                if (w.confidence < config.low_confidence)
                    result.question_warnings[current].push_back(
                        {"LowConfidenceText",
                         "fragment '" + w.text + "' recognized with confidence " +
                             std::to_string(w.confidence)});
            }
            bundle_for(current).answer_text.push_back(line);
        }
    }

    // Drop the unassigned bundle if nothing actually landed there.
    if (auto it = result.bundles.find(kUnassignedQuestion); it != result.bundles.end()) {
        if (it->second.answer_text.empty() && it->second.diagrams.empty())
            result.bundles.erase(it);
    }
    return result;
}

}  // namespace flowgrade
