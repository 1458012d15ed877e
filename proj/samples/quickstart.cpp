// Minimal library walkthrough: build a flowchart from primitives, print its
// canonical text, and grade it against a variant with different branch labels.

#include <iostream>

#include "flowgrade/flowgrade.hpp"

using namespace flowgrade;

namespace {

Primitive shape(int id, PrimitiveClass cls, double x, double y, double w, double h) {
    return {id, cls, {x, y, w, h}, 0.95, {}};
}

Primitive arrow(int id, Point tail, Point head) {
    Primitive p{id, PrimitiveClass::Arrow, {}, 0.9, {tail, head}};
    p.bbox = {std::min(tail.x, head.x), std::min(tail.y, head.y),
              std::max(1.0, std::abs(head.x - tail.x)), std::max(1.0, std::abs(head.y - tail.y))};
    return p;
}

Primitive arrowhead(int id, Point at) {
    return {id, PrimitiveClass::Arrowhead, {at.x - 4, at.y - 4, 8, 8}, 0.9, {}};
}

TextFragment word(const std::string& text, double x, double y, double w = 60, double h = 16) {
    return {{x, y, w, h}, text, 0.99};
}

}  // namespace

int main() {
    // start -> is n odd? -(yes)-> print n ; -(no)-> stop
    std::vector<Primitive> prims = {
        shape(0, PrimitiveClass::Terminator, 100, 0, 120, 40),
        shape(1, PrimitiveClass::Decision, 100, 120, 120, 60),
        shape(2, PrimitiveClass::Process, 0, 280, 120, 40),
        shape(3, PrimitiveClass::Terminator, 220, 280, 120, 40),
        arrow(4, {160, 40}, {160, 120}),
        arrowhead(5, {160, 120}),
        arrow(6, {130, 180}, {60, 280}),
        arrowhead(7, {60, 280}),
        arrow(8, {190, 180}, {280, 280}),
        arrowhead(9, {280, 280}),
    };
    std::vector<TextFragment> frags = {
        word("start", 130, 10),
        word("is n odd?", 110, 140, 100),
        word("print n", 30, 290),
        word("stop", 250, 290),
        word("yes", 70, 210, 30),
        word("no", 250, 210, 24),
    };

    FlowGraph graph = build_graph(prims, frags);
    const std::string canonical = serialize(graph);
    std::cout << "canonical form:\n" << canonical << "\n";

    // The same chart drawn with true/false labels grades identically.
    std::vector<TextFragment> variant = frags;
    variant[4].text = "true";
    variant[5].text = "false";
    FlowGraph other = build_graph(prims, variant);

    const SimilarityScore sim = graph_similarity(graph, other);
    std::cout << "similarity vs true/false variant: " << sim.value << "\n";

    MockBackend mock;
    Gateway gateway;
    GradingRequest req;
    req.question_id = "Q1";
    req.kind = GradingKind::Diagram;
    req.student_payload = serialize(other);
    req.model_payload = canonical;
    req.max_marks = 5;
    const GradingVerdict verdict = gateway.grade(req, mock);
    std::cout << "mock verdict: " << verdict.score << "/" << verdict.max << "\n";
    return 0;
}
