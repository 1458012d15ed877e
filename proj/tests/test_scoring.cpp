#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "flowgrade/scoring.hpp"
#include "helpers/test_support.hpp"

using namespace flowgrade;
using Catch::Approx;

namespace {

FlowNode gnode(std::string id, NodeKind kind, std::string text, double y, double x = 100) {
    return {std::move(id), kind, std::move(text), {x, y, 120, 40}};
}

FlowGraph yes_no_chart(const std::string& yes, const std::string& no) {
    FlowGraph g;
    g.nodes = {
        gnode("s", NodeKind::Start, "start", 0),
        gnode("c", NodeKind::Condition, "is empty", 100),
        gnode("p", NodeKind::Process, "pop item", 200, 0),
        gnode("t", NodeKind::Stop, "stop", 200, 300),
    };
    g.edges = {{"s", "c", ""}, {"c", "p", no}, {"c", "t", yes}};
    return g;
}

std::string random_words(std::mt19937& rng, int count) {
    static const std::vector<std::string> vocab = {"the", "cat",  "sat",  "ran",  "stack",
                                                   "pop", "push", "item", "queue", "tree"};
    std::uniform_int_distribution<int> pick(0, int(vocab.size()) - 1);
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (!out.empty()) out += ' ';
        out += vocab[pick(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("tokenize lowercases, strips punctuation, splits on whitespace") {
    CHECK(tokenize("The CAT, sat!") == std::vector<std::string>{"the", "cat", "sat"});
    CHECK(tokenize("  ") == std::vector<std::string>{});
    CHECK(tokenize("a  b\t c\nd") == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(tokenize("!!!") == std::vector<std::string>{});
}

TEST_CASE("cosine similarity worked values") {
    CHECK(cosine_similarity("same text here", "same text here") == Approx(1.0));
    CHECK(cosine_similarity("alpha beta", "gamma delta") == 0.0);
    CHECK(cosine_similarity("", "anything") == 0.0);
    CHECK(cosine_similarity("the cat sat", "the cat ran") == Approx(2.0 / 3.0).margin(1e-9));
}

TEST_CASE("cosine similarity properties on random pairs") {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> len(0, 12);
    for (int round = 0; round < 200; ++round) {
        const std::string a = random_words(rng, len(rng));
        const std::string b = random_words(rng, len(rng));
        const double ab = cosine_similarity(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0 + 1e-12);
        CHECK(ab == cosine_similarity(b, a));
        if (!tokenize(a).empty()) CHECK(cosine_similarity(a, a) == Approx(1.0));
    }
}

TEST_CASE("levenshtein worked values") {
    CHECK(levenshtein("abc", "abc").distance == 0);
    CHECK(levenshtein("abc", "abc").similarity == 1.0);
    CHECK(levenshtein("", "abc").distance == 3);
    CHECK(levenshtein("", "").similarity == 1.0);
    CHECK(levenshtein("kitten", "sitting").distance == 3);
    CHECK(levenshtein("kitten", "sitting").similarity == Approx(1.0 - 3.0 / 7.0));
}

TEST_CASE("levenshtein agrees with the reference matrix and is a metric") {
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> len(0, 25), letter(0, 3);
    auto random_string = [&]() {
        std::string s;
        const int n = len(rng);
        for (int i = 0; i < n; ++i) s += static_cast<char>('a' + letter(rng));
        return s;
    };
    for (int round = 0; round < 300; ++round) {
        const std::string a = random_string(), b = random_string(), c = random_string();
        const int ab = levenshtein(a, b).distance;
        CHECK(ab == testsupport::levenshtein_reference(a, b));
        CHECK(ab == levenshtein(b, a).distance);
        CHECK(ab <= levenshtein(a, c).distance + levenshtein(c, b).distance);
    }
}

TEST_CASE("keyword coverage") {
    CHECK(keyword_coverage("stack push pop", {"stack", "push", "pop"}) == 1.0);
    CHECK(keyword_coverage("nothing relevant", {"stack", "push"}) == 0.0);
    CHECK(keyword_coverage("a stack supports push", {"stack", "push", "pop"}) ==
          Approx(2.0 / 3.0));
    // phrases match contiguous token runs, case- and punctuation-insensitive
    CHECK(keyword_coverage("uses last in first out order", {"last in first out"}) == 1.0);
    CHECK(keyword_coverage("last out, first in", {"last in first out"}) == 0.0);
    CHECK(keyword_coverage("The STACK!", {"stack"}) == 1.0);
    CHECK_THROWS_AS(keyword_coverage("anything", {}), EmptyKeywordSet);
}

TEST_CASE("normalize_label collapses boolean synonym classes") {
    CHECK(normalize_label("TRUE") == "yes");
    CHECK(normalize_label("No") == "no");
    CHECK(normalize_label("i > 10") == "i > 10");
    CHECK(normalize_label("  Yes ") == "yes");
    CHECK(normalize_label("t") == "yes");
    CHECK(normalize_label("F") == "no");
    CHECK(normalize_label("") == "");
}

TEST_CASE("normalize_label is idempotent") {
    for (const std::string s : {"TRUE", "No", "i > 10", "  Yes ", "mixed Case", "t", ""}) {
        const std::string once = normalize_label(s);
        CHECK(normalize_label(once) == once);
    }
}

TEST_CASE("normalize_label honors custom synonym tables") {
    SynonymTable table;
    table.classes.push_back({"left", "l", "west"});
    CHECK(normalize_label("WEST", table) == "left");
    CHECK(normalize_label("true", table) == "yes");  // defaults still present
}

TEST_CASE("graph similarity of identical graphs is exactly 1") {
    const FlowGraph g = yes_no_chart("yes", "no");
    const SimilarityScore s = graph_similarity(g, g);
    CHECK(s.value == 1.0);
    CHECK(s.components.at("types") == 1.0);
    CHECK(s.components.at("edges") == 1.0);
    CHECK(s.components.at("text") == 1.0);
    CHECK_FALSE(s.approximate);
}

TEST_CASE("graph similarity is invariant under boolean label wording") {
    const FlowGraph with_yes_no = yes_no_chart("yes", "no");
    const FlowGraph with_true_false = yes_no_chart("true", "false");
    CHECK(graph_similarity(with_yes_no, with_true_false).value == 1.0);
    const double oracle =
        testsupport::graph_similarity_oracle(with_yes_no, with_true_false);
    CHECK(oracle == 1.0);
}

TEST_CASE("graph similarity handles empty graphs") {
    const FlowGraph empty;
    const FlowGraph g = yes_no_chart("yes", "no");
    CHECK(graph_similarity(empty, empty).value == 1.0);
    CHECK(graph_similarity(empty, g).value == 0.0);
    CHECK(graph_similarity(g, empty).value == 0.0);
}

TEST_CASE("graph similarity of one start node vs a four-node chart") {
    FlowGraph single;
    single.nodes = {gnode("x", NodeKind::Start, "start", 0)};
    FlowGraph chain;
    chain.nodes = {
        gnode("s", NodeKind::Start, "start", 0),
        gnode("p", NodeKind::Process, "read n", 100),
        gnode("q", NodeKind::Process, "print n", 200),
        gnode("t", NodeKind::Stop, "stop", 300),
    };
    chain.edges = {{"s", "p", ""}, {"p", "q", ""}, {"q", "t", ""}};
    const SimilarityScore s = graph_similarity(single, chain);
    // best mapping: start -> start. types 1/4, edges 0/3, text 1/4
    CHECK(s.value == Approx(0.3 * 0.25 + 0.0 + 0.3 * 0.25).margin(1e-12));
    CHECK(s.value == Approx(testsupport::graph_similarity_oracle(single, chain)).margin(1e-12));
}

TEST_CASE("graph similarity is symmetric and matches the exhaustive oracle") {
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> n_nodes(2, 8);
    int pairs = 0;
    while (pairs < 25) {
        const auto spec_a = testsupport::random_chart(rng, n_nodes(rng));
        const auto spec_b = testsupport::random_chart(rng, n_nodes(rng), pairs % 2 == 1);
        const FlowGraph a = testsupport::graph_from_spec(spec_a);
        const FlowGraph b = testsupport::graph_from_spec(spec_b);
        const SimilarityScore ab = graph_similarity(a, b);
        const SimilarityScore ba = graph_similarity(b, a);
        CHECK(ab.value == Approx(ba.value).margin(1e-12));
        CHECK(ab.value >= 0.0);
        CHECK(ab.value <= 1.0 + 1e-12);
        CHECK(ab.value == Approx(testsupport::graph_similarity_oracle(a, b)).margin(1e-9));
        ++pairs;
    }
}

TEST_CASE("graph similarity equals 1 under permutation, renaming and synonyms") {
    std::mt19937 rng(43);
    for (int round = 0; round < 10; ++round) {
        const auto spec = testsupport::random_chart(rng, 3 + round % 6);
        const FlowGraph g = testsupport::graph_from_spec(spec);
        FlowGraph variant = g;
        for (auto& n : variant.nodes) n.id = "renamed_" + n.id;
        for (auto& e : variant.edges) {
            e.from = "renamed_" + e.from;
            e.to = "renamed_" + e.to;
            if (e.label == "yes") e.label = "TRUE";
            if (e.label == "no") e.label = "False";
        }
        std::shuffle(variant.nodes.begin(), variant.nodes.end(), rng);
        std::shuffle(variant.edges.begin(), variant.edges.end(), rng);
        CHECK(graph_similarity(g, variant).value == 1.0);
    }
}

TEST_CASE("graph similarity reports the weighted component sum") {
    std::mt19937 rng(47);
    const FlowGraph a = testsupport::graph_from_spec(testsupport::random_chart(rng, 5));
    const FlowGraph b = testsupport::graph_from_spec(testsupport::random_chart(rng, 7));
    const GraphWeights w{0.2, 0.5, 0.3};
    const SimilarityScore s = graph_similarity(a, b, w);
    CHECK(s.value == Approx(0.2 * s.components.at("types") + 0.5 * s.components.at("edges") +
                            0.3 * s.components.at("text"))
                         .margin(1e-12));
}

TEST_CASE("graph similarity goes greedy above eight nodes") {
    FlowGraph big;
    for (int i = 0; i < 9; ++i)
        big.nodes.push_back(gnode("n" + std::to_string(i),
                                  i == 0 ? NodeKind::Start
                                         : (i == 8 ? NodeKind::Stop : NodeKind::Process),
                                  "step " + std::to_string(i), 100.0 * i));
    for (int i = 0; i + 1 < 9; ++i)
        big.edges.push_back({"n" + std::to_string(i), "n" + std::to_string(i + 1), ""});
    const SimilarityScore s = graph_similarity(big, big);
    CHECK(s.approximate);
    CHECK(s.value == 1.0);  // greedy still finds the identity mapping here
    CHECK_FALSE(graph_similarity(yes_no_chart("yes", "no"), yes_no_chart("yes", "no")).approximate);
}

TEST_CASE("round_to_step behaves like exam marking") {
    CHECK(round_to_step(3.33) == 3.5);
    CHECK(round_to_step(3.6) == 3.5);
    CHECK(round_to_step(3.74) == 3.5);
    CHECK(round_to_step(3.76) == 4.0);
    CHECK(round_to_step(0.0) == 0.0);
    CHECK(round_to_step(4.4, 0.0) == 4.4);  // disabled rounding passes through
}

TEST_CASE("deterministic text score") {
    const GradingVerdict full = deterministic_text_score("same answer", "same answer",
                                                         std::nullopt, 5.0);
    CHECK(full.score == 5.0);
    CHECK(full.max == 5.0);
    CHECK(full.backend == "deterministic");

    const GradingVerdict zero = deterministic_text_score("", "model answer", std::nullopt, 5.0);
    CHECK(zero.score == 0.0);

    // cosine 2/3, coverage 2/3, max 5 -> 5*(0.6*2/3 + 0.4*2/3) = 10/3 -> 3.5
    const GradingVerdict blended = deterministic_text_score(
        "the cat sat", "the cat ran", std::set<std::string>{"the", "cat", "missing"}, 5.0);
    CHECK(blended.score == 3.5);
    CHECK_THAT(blended.justification,
               Catch::Matchers::ContainsSubstring("cosine") &&
                   Catch::Matchers::ContainsSubstring("keyword"));
}
