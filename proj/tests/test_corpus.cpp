#include <doctest.h>

#include <sstream>

#include "selqa/corpus.hpp"
#include "selqa/error.hpp"

using namespace selqa;

namespace {

std::vector<std::string> forms(const Tokens& t) {
    std::vector<std::string> out;
    for (const auto& x : t) out.push_back(x.form);
    return out;
}

const char* kSections =
    R"({"article_id": "A1", "section_id": "S1", "topic": "Movies", "title": "t", "sentences": ["The premiere was reviewed.", "Critics liked it.", "It ran long."]})"
    "\n";

}  // namespace

TEST_CASE("tokenize splits whitespace and peels punctuation") {
    CHECK(tokenize("").empty());
    CHECK(forms(tokenize("How was the premiere reviewed?")) ==
          std::vector<std::string>{"How", "was", "the", "premiere", "reviewed", "?"});
    CHECK(forms(tokenize("a b  c")) == std::vector<std::string>{"a", "b", "c"});
    CHECK(forms(tokenize("(\"quoted\"),")) == std::vector<std::string>{"(", "\"", "quoted", "\"", ")", ","});
    CHECK(forms(tokenize("U.S. e-mail")) == std::vector<std::string>{"U.S", ".", "e-mail"});

    auto t = tokenize("The Cat");
    CHECK(t[0].lower == "the");
    CHECK(t[1].index == 1);
}

TEST_CASE("tokenize is idempotent on its joined output") {
    for (const char* s : {"How was the premiere reviewed?", "  (a) b, c...  ", "\"Hi!\" she said.", "x"}) {
        auto once = tokenize(s);
        CHECK(forms(tokenize(join_forms(once))) == forms(once));
    }
}

TEST_CASE("classify_qtype") {
    CHECK(classify_qtype(tokenize("How was the premiere reviewed?")) == QType::How);
    CHECK(classify_qtype(tokenize("Who felt that Criminal Minds had confusing characters?")) == QType::Who);
    CHECK(classify_qtype(tokenize("Name the tallest mountain.")) == QType::Misc);
    CHECK(classify_qtype(tokenize("In what year did it open?")) == QType::What);
    CHECK(classify_qtype(tokenize("WHY not?")) == QType::Why);
    CHECK(classify_qtype(tokenize("")) == QType::Misc);
}

TEST_CASE("load_sections counts and errors") {
    auto store = load_sections(std::string(SELQA_TEST_DATA) + "/sections.jsonl");
    auto c = store.counts();
    CHECK(c.articles == 2);
    CHECK(c.sections == 3);
    CHECK(c.sentences == 10);
    CHECK(store.at("S3").topic == Topic::Science);
    CHECK(store.sentence("S1", 3) != nullptr);
    CHECK(store.sentence("S1", 4) == nullptr);

    std::istringstream missing(R"({"article_id": "A", "section_id": "S", "topic": "Arts", "title": "t"})");
    CHECK_THROWS_WITH_AS(parse_sections(missing), doctest::Contains("line 1"), DataError);

    std::istringstream dup(std::string(kSections) + kSections);
    CHECK_THROWS_AS(parse_sections(dup), DataError);

    std::istringstream malformed(std::string(kSections) + "{not json\n");
    CHECK_THROWS_WITH_AS(parse_sections(malformed), doctest::Contains("line 2"), DataError);
}

TEST_CASE("load_dataset validates candidates and answers") {
    auto store = std::make_shared<SectionStore>(load_sections(std::string(SELQA_TEST_DATA) + "/sections.jsonl"));
    const std::string q =
        R"({"id": "Q1", "text": "How was the premiere reviewed?", "topic": "Movies", "origin": "original", "split": "TRN", "candidates": [{"section_id": "S1", "sent_index": 0, "label": LABEL}, {"section_id": "S1", "sent_index": 1, "label": 0}, {"section_id": "S1", "sent_index": 2, "label": 0}]})";
    auto with_label = [&](const char* l) {
        auto s = q;
        s.replace(s.find("LABEL"), 5, l);
        return s;
    };

    std::istringstream ok(with_label("1"));
    Dataset ds = parse_questions(ok, Task::ASS);
    ds.sections = store;
    validate_dataset(ds, [&](std::string_view id) -> std::optional<std::size_t> {
        auto* s = store->find(id);
        return s ? std::optional<std::size_t>(s->sentences.size()) : std::nullopt;
    });
    REQUIRE(ds.questions.size() == 1);
    CHECK(ds.questions[0].qtype == QType::How);
    CHECK(ds.candidates_of("Q1").size() == 3);
    CHECK(ds.sentence_of(ds.candidates_of("Q1")[0]).raw == "The premiere was reviewed by critics in 2005.");

    std::istringstream none(with_label("0"));
    Dataset bad = parse_questions(none, Task::ASS);
    CHECK_THROWS_WITH_AS(validate_dataset(bad, [](std::string_view) { return std::optional<std::size_t>(4); }),
                         doctest::Contains("Q1"), DataError);

    // The same file is a valid triggering dataset.
    std::istringstream none_at(with_label("0"));
    Dataset at = parse_questions(none_at, Task::AT);
    CHECK_NOTHROW(validate_dataset(at, [](std::string_view) { return std::optional<std::size_t>(4); }));

    CHECK_THROWS_AS(load_dataset(std::string(SELQA_TEST_DATA) + "/dangling.jsonl", store, Task::ASS), DataError);

    std::istringstream dup(with_label("1") + "\n" + with_label("1"));
    CHECK_THROWS_AS(parse_questions(dup, Task::ASS), DataError);
}

TEST_CASE("split sizes sum to the question count") {
    auto store = std::make_shared<SectionStore>(load_sections(std::string(SELQA_TEST_DATA) + "/sections.jsonl"));
    auto ds = load_dataset(std::string(SELQA_TEST_DATA) + "/golden_gold.jsonl", store, Task::ASS);
    std::size_t total = 0;
    for (auto [split, n] : ds.split_counts()) total += n;
    CHECK(total == ds.questions.size());
    CHECK(ds.subset(Split::TST).questions.size() == 2);
    CHECK(ds.subset(Split::TST).candidates_of("Q3").size() == 3);
}

TEST_CASE("questions round-trip through the writer") {
    auto store = std::make_shared<SectionStore>(load_sections(std::string(SELQA_TEST_DATA) + "/sections.jsonl"));
    auto ds = load_dataset(std::string(SELQA_TEST_DATA) + "/golden_gold.jsonl", store, Task::ASS);
    std::stringstream buf;
    write_questions(buf, ds, nlohmann::json{{"note", "x"}});
    auto back = parse_questions(buf, Task::ASS);
    REQUIRE(back.questions.size() == ds.questions.size());
    for (std::size_t i = 0; i < ds.questions.size(); ++i) {
        CHECK(back.questions[i].text == ds.questions[i].text);
        CHECK(back.questions[i].origin == ds.questions[i].origin);
        CHECK(back.candidates_of(ds.questions[i].id).size() == ds.candidates_of(ds.questions[i].id).size());
    }
}
