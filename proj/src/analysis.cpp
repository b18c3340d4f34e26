#include "selqa/analysis.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "selqa/error.hpp"
#include "selqa/kernels.hpp"

namespace selqa {

using nlohmann::json;

namespace {

std::set<std::string> content_types(const Tokens& tokens) {
    std::set<std::string> out;
    for (const auto& t : tokens) {
        if (!is_punctuation(t.form)) out.insert(t.lower);
    }
    return out;
}

}  // namespace

OverlapStats overlap(const Tokens& question, const Tokens& answer) {
    if (question.empty() || answer.empty()) throw DataError("overlap: both token lists must be non-empty");
    const auto q = content_types(question);
    const auto a = content_types(answer);
    std::size_t shared = 0;
    for (const auto& w : q) shared += a.count(w);
    OverlapStats s;
    s.omega_q = q.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(q.size());
    s.omega_a = a.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(a.size());
    // Harmonic mean of the two ratios, in a form that stays exact for small counts.
    s.omega_f = shared > 0 ? 2.0 * static_cast<double>(shared) / static_cast<double>(q.size() + a.size()) : 0.0;
    return s;
}

std::string_view to_string(QuestionLength b) {
    switch (b) {
        case QuestionLength::UpTo5: return "<=5";
        case QuestionLength::From6To8: return "6-8";
        case QuestionLength::From9To11: return "9-11";
        case QuestionLength::AtLeast12: return ">=12";
    }
    return "<=5";
}

std::string_view to_string(SectionLength b) {
    switch (b) {
        case SectionLength::UpTo7: return "3-7";
        case SectionLength::From8To12: return "8-12";
        case SectionLength::From13To18: return "13-18";
        case SectionLength::AtLeast19: return ">=19";
    }
    return "3-7";
}

std::pair<QuestionLength, SectionLength> length_bucket(std::size_t question_len, std::size_t section_len) {
    QuestionLength q = question_len <= 5   ? QuestionLength::UpTo5
                       : question_len <= 8  ? QuestionLength::From6To8
                       : question_len <= 11 ? QuestionLength::From9To11
                                            : QuestionLength::AtLeast12;
    SectionLength s = section_len <= 7    ? SectionLength::UpTo7
                      : section_len <= 12 ? SectionLength::From8To12
                      : section_len <= 18 ? SectionLength::From13To18
                                          : SectionLength::AtLeast19;
    return {q, s};
}

CorpusReport corpus_report(const Dataset& dataset) {
    CorpusReport r;
    if (dataset.sections) r.counts = dataset.sections->counts();
    r.questions = dataset.questions.size();

    struct PerQuestion {
        std::size_t answers = 0;
        OverlapStats stats;
    };
    std::vector<PerQuestion> per(dataset.questions.size());
    kernels::parallel_for(dataset.questions.size(), [&](std::size_t i) {
        const auto& q = dataset.questions[i];
        Tokens answer;
        for (const auto& c : dataset.candidates_of(q.id)) {
            if (!c.label) continue;
            ++per[i].answers;
            const auto& toks = dataset.sentence_of(c).tokens;
            answer.insert(answer.end(), toks.begin(), toks.end());
        }
        if (per[i].answers && !q.tokens.empty() && !answer.empty()) per[i].stats = overlap(q.tokens, answer);
    });

    double sq = 0.0, sa = 0.0, sf = 0.0;
    std::size_t answered = 0;
    for (std::size_t i = 0; i < per.size(); ++i) {
        const auto& q = dataset.questions[i];
        ++r.by_topic[std::string(to_string(q.topic))];
        ++r.by_qtype[std::string(to_string(q.qtype))];
        ++r.by_origin[std::string(to_string(q.origin))];
        ++r.by_split[std::string(to_string(q.split))];
        if (per[i].answers == 0) {
            ++r.unanswerable;
            continue;
        }
        (per[i].answers == 1 ? r.single_sentence : r.multi_sentence) += 1;
        sq += per[i].stats.omega_q;
        sa += per[i].stats.omega_a;
        sf += per[i].stats.omega_f;
        ++answered;
    }
    if (answered) {
        r.omega_q = 100.0 * sq / static_cast<double>(answered);
        r.omega_a = 100.0 * sa / static_cast<double>(answered);
        r.omega_f = 100.0 * sf / static_cast<double>(answered);
    }
    return r;
}

json CorpusReport::to_json() const {
    return json{
        {"lexical",
         {{"total_articles", counts.articles},
          {"total_sections", counts.sections},
          {"total_sentences", counts.sentences},
          {"total_tokens", counts.tokens}}},
        {"annotation",
         {{"Q_s", single_sentence},
          {"Q_m", multi_sentence},
          {"Q_s+m", single_sentence + multi_sentence},
          {"Omega_q", omega_q},
          {"Omega_a", omega_a},
          {"Omega_f", omega_f}}},
        {"questions", questions},
        {"unanswerable", unanswerable},
        {"by_topic", by_topic},
        {"by_qtype", by_qtype},
        {"by_origin", by_origin},
        {"by_split", by_split},
    };
}

}  // namespace selqa
