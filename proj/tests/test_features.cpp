#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "selqa/error.hpp"
#include "selqa/features.hpp"
#include "selqa/synth.hpp"

using namespace selqa;

TEST_CASE("cooccurring anchors first occurrences") {
    CHECK(cooccurring(tokenize("x y"), tokenize("z")).empty());
    auto t = cooccurring(tokenize("the cat sat"), tokenize("a cat sat down"));
    REQUIRE(t.size() == 2);
    CHECK(t[0] == CoWord{1, 1, "cat"});
    CHECK(t[1] == CoWord{2, 2, "sat"});
    auto dup = cooccurring(tokenize("cat Cat cat"), tokenize("dog CAT cat"));
    REQUIRE(dup.size() == 1);
    CHECK(dup[0] == CoWord{0, 1, "cat"});
    CHECK(cooccurring(tokenize("a ?"), tokenize("b ?")).empty());
}

TEST_CASE("dependency trees validate") {
    CHECK_NOTHROW(DependencyTree({-1, 0, 0}, {"a", "b", "c"}));
    CHECK_THROWS_AS(DependencyTree({-1, -1}, {"a", "b"}), DataError);
    CHECK_THROWS_AS(DependencyTree({1, 0}, {"a", "b"}), DataError);
    CHECK_THROWS_AS(DependencyTree({-1, 1}, {"a", "b"}), DataError);
    CHECK_THROWS_AS(DependencyTree({-1, 5}, {"a", "b"}), DataError);
    DependencyTree t({-1, 0, 0, 1}, {"A", "b", "c", "d"});
    CHECK(t.forms()[0] == "a");
    CHECK(t.children(0) == std::vector<std::size_t>{1, 2});
    CHECK(t.siblings(1) == std::vector<std::size_t>{2});
    CHECK(t.siblings(0).empty());
}

TEST_CASE("parse file blocks") {
    std::istringstream in("# S1 0\n0\tThe\t1\n1\tcat\t-1\n\n# Q7\n0\tcat\t-1\n\n");
    auto bank = parse_parses(in);
    REQUIRE(bank.sentence("S1", 0) != nullptr);
    CHECK(bank.sentence("S1", 0)->head(0) == 1);
    REQUIRE(bank.question("Q7") != nullptr);
    std::istringstream bad("# S1 0\n0\tThe\t3\n\n");
    CHECK_THROWS_AS(parse_parses(bad), DataError);
}

TEST_CASE("subtree_match worked examples") {
    SubtreeConfig max{Comparator::Form, Metric::Max};
    SubtreeConfig sum{Comparator::Form, Metric::Sum};
    DependencyTree q({-1, 0, 1}, {"saw", "w", "a"});
    DependencyTree a({-1, 0, 1, 1}, {"saw", "w", "a", "b"});
    std::vector<CoWord> shared{{1, 1, "w"}};

    CHECK(subtree_match(q, a, {}, max) == SubtreeScore{0, 0, 0});
    CHECK(subtree_match(q, a, shared, max) == SubtreeScore{1, 0, 1});
    CHECK(subtree_match(q, a, shared, sum) == SubtreeScore{1, 0, 1});

    DependencyTree q2({-1, 0, 1, 1}, {"saw", "w", "a", "a"});
    DependencyTree a2({-1, 0, 1, 1}, {"saw", "w", "a", "a"});
    CHECK(subtree_match(q2, a2, shared, sum).s_child == 4.0);
    CHECK(subtree_match(q2, a2, shared, {Comparator::Form, Metric::Avg}).s_child == 1.0);

    // Both roots: the virtual ROOT matches.
    CHECK(subtree_match(q, a, {{0, 0, "saw"}}, max).s_parent == 1.0);
    CHECK(subtree_match(q, a, {{0, 1, "saw"}}, max).s_parent == 0.0);

    CHECK_THROWS_AS(subtree_match(q, a, {{7, 0, "x"}}, max), DataError);
    CHECK_THROWS_AS(subtree_match(q, a, shared, {Comparator::Embedding, Metric::Max}), UsageError);
}

TEST_CASE("subtree_match equals pair enumeration and respects metric ordering") {
    std::mt19937_64 rng(11);
    EmbeddingTable emb(3);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
    std::normal_distribution<float> g;
    for (const auto& w : vocab) {
        std::vector<float> v{g(rng), g(rng), g(rng)};
        emb.add(w, v);
    }
    std::uniform_int_distribution<std::size_t> len(1, 8), word(0, vocab.size());  // last id is OOV
    auto forms = [&](std::size_t n) {
        std::vector<std::string> f;
        for (std::size_t i = 0; i < n; ++i) {
            auto w = word(rng);
            f.push_back(w == vocab.size() ? "oov" : vocab[w]);
        }
        return f;
    };
    for (int trial = 0; trial < 50; ++trial) {
        auto fq = forms(len(rng)), fa = forms(len(rng));
        auto tq = random_tree(fq.size(), fq, rng());
        auto ta = random_tree(fa.size(), fa, rng());
        Tokens q, a;
        for (std::size_t i = 0; i < fq.size(); ++i) q.push_back({fq[i], fq[i], i});
        for (std::size_t i = 0; i < fa.size(); ++i) a.push_back({fa[i], fa[i], i});
        auto shared = cooccurring(q, a);
        SubtreeScore by_metric[3];
        for (auto c : {Comparator::Form, Comparator::Embedding}) {
            int m_i = 0;
            for (auto m : {Metric::Sum, Metric::Avg, Metric::Max}) {
                SubtreeConfig cfg{c, m};
                auto got = subtree_match(tq, ta, shared, cfg, &emb);
                CHECK(got == oracle::subtree(tq.heads(), tq.forms(), ta.heads(), ta.forms(), shared, cfg, &emb));
                if (c == Comparator::Form) by_metric[m_i++] = got;
            }
        }
        CHECK(by_metric[1].s_child <= by_metric[2].s_child);
        CHECK(by_metric[2].s_child <= by_metric[0].s_child);
        CHECK(by_metric[2].s_parent <= static_cast<double>(shared.size()));
    }
}

TEST_CASE("idf and lexical features") {
    auto s1 = tokenize("cat sat"), s2 = tokenize("cat ran"), s3 = tokenize("dog ran");
    auto idf = build_idf({&s1, &s2, &s3});
    CHECK(idf.idf("cat") == doctest::Approx(std::log(4.0 / 3.0) + 1.0));
    CHECK(idf.idf("zzz") == doctest::Approx(std::log(4.0) + 1.0));
    auto all = tokenize("x"), all2 = tokenize("x"), all3 = tokenize("x");
    CHECK(build_idf({&all, &all2, &all3}).idf("x") == doctest::Approx(1.0));
    CHECK(build_idf({&all}).idf("x") == doctest::Approx(1.0));
    CHECK_THROWS_AS(build_idf({}), DataError);

    auto f = lexical_features(tokenize("cat sat"), tokenize("cat"), idf);
    const double cat = std::log(4.0 / 3.0) + 1.0, sat = std::log(4.0 / 2.0) + 1.0;
    CHECK(f.overlap_count == 1.0);
    CHECK(f.overlap_idf == doctest::Approx(cat / (cat + sat)));
    CHECK(f.q_len == 2.0);

    auto d = lexical_features(tokenize("x y ?"), tokenize("z"), idf);
    CHECK(d.overlap_count == 0.0);
    CHECK(d.overlap_idf == 0.0);
    CHECK(d.q_len == 3.0);
    CHECK(lexical_features(tokenize("cat sat"), tokenize("sat cat dog"), idf).overlap_idf == doctest::Approx(1.0));
}

TEST_CASE("embedding file round trip") {
    EmbeddingTable t(2);
    t.add("Hello", std::vector<float>{1.0f, -0.5f});
    t.add("x", std::vector<float>{0.25f, 2.0f});
    std::stringstream buf;
    write_embeddings(buf, t);
    auto back = parse_embeddings(buf);
    CHECK(back.dim() == 2);
    REQUIRE(back.row("Hello"));
    CHECK(back.vector(*back.row("Hello"))[1] == -0.5f);
    CHECK(back.row("X"));  // falls back to the lower-cased form
    std::istringstream bad("1 3\nw 1 2\n");
    CHECK_THROWS_AS(parse_embeddings(bad), DataError);
}
