#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "selqa/corpus.hpp"

namespace selqa {

/// Word-overlap ratios over distinct lower-cased non-punctuation types.
struct OverlapStats {
    double omega_q = 0.0;
    double omega_a = 0.0;
    double omega_f = 0.0;
};

/// Both sides must be non-empty. ω_f is the harmonic mean, 0 when both ratios are 0.
OverlapStats overlap(const Tokens& question, const Tokens& answer);

enum class QuestionLength { UpTo5, From6To8, From9To11, AtLeast12 };
enum class SectionLength { UpTo7, From8To12, From13To18, AtLeast19 };

std::string_view to_string(QuestionLength b);
std::string_view to_string(SectionLength b);

/// Question buckets {<=5, 6-8, 9-11, >=12} tokens; section buckets
/// {3-7, 8-12, 13-18, >=19} sentences, the first also absorbing 1-2.
std::pair<QuestionLength, SectionLength> length_bucket(std::size_t question_len, std::size_t section_len);

struct CorpusReport {
    CorpusCounts counts;
    std::size_t questions = 0;
    std::size_t single_sentence = 0;  // Q_s
    std::size_t multi_sentence = 0;   // Q_m
    std::size_t unanswerable = 0;
    double omega_q = 0.0;  // percent, macro-averaged over answerable questions
    double omega_a = 0.0;
    double omega_f = 0.0;
    std::map<std::string, std::size_t> by_topic;
    std::map<std::string, std::size_t> by_qtype;
    std::map<std::string, std::size_t> by_origin;
    std::map<std::string, std::size_t> by_split;

    nlohmann::json to_json() const;
};

/// The answer side of each question is the concatenation of its answer sentences.
CorpusReport corpus_report(const Dataset& dataset);

}  // namespace selqa
