#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace selqa {

enum class Topic { Arts, Country, Food, HistoricalEvents, Movies, Music, Science, Sports, Travel, TV };
enum class Origin { Original, Paraphrase };
enum class QType { What, How, Who, When, Where, Why, Misc };
enum class Split { TRN, DEV, TST };
enum class Task { ASS, AT };

std::string_view to_string(Topic t);
std::string_view to_string(Origin o);
std::string_view to_string(QType q);
std::string_view to_string(Split s);
std::string_view to_string(Task t);

std::optional<Topic> parse_topic(std::string_view s);
std::optional<Origin> parse_origin(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<Task> parse_task(std::string_view s);

struct Token {
    std::string form;
    std::string lower;
    std::size_t index = 0;
};

using Tokens = std::vector<Token>;

/// Whitespace split, then leading and trailing ASCII punctuation is peeled off
/// one character at a time into standalone tokens. Original forms are kept.
Tokens tokenize(std::string_view text);

/// Re-joins token forms with single spaces.
std::string join_forms(const Tokens& tokens);

/// True when every byte of the token is ASCII punctuation.
bool is_punctuation(std::string_view form);

std::string to_lower(std::string_view s);

/// First token matching a wh-word, else the first match anywhere, else Misc.
QType classify_qtype(const Tokens& tokens);

struct Sentence {
    std::string section_id;
    std::size_t sent_index = 0;
    std::string raw;
    Tokens tokens;
};

struct Section {
    std::string article_id;
    std::string section_id;
    Topic topic = Topic::Arts;
    std::string title;
    std::vector<Sentence> sentences;
};

struct CorpusCounts {
    std::size_t articles = 0;
    std::size_t sections = 0;
    std::size_t sentences = 0;
    std::size_t tokens = 0;
};

/// Immutable after loading; ordered by first appearance in the source file.
class SectionStore {
  public:
    void add(Section section);

    const Section* find(std::string_view section_id) const;
    const Section& at(std::string_view section_id) const;
    const Sentence* sentence(std::string_view section_id, std::size_t sent_index) const;

    const std::vector<Section>& sections() const { return sections_; }
    std::size_t size() const { return sections_.size(); }
    bool empty() const { return sections_.empty(); }

    CorpusCounts counts() const;

  private:
    std::vector<Section> sections_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

SectionStore parse_sections(std::istream& in);
SectionStore load_sections(const std::string& path);

struct Question {
    std::string id;
    std::string text;
    Tokens tokens;
    Topic topic = Topic::Arts;
    Origin origin = Origin::Original;
    QType qtype = QType::Misc;
    Split split = Split::TRN;
};

struct Candidate {
    std::string question_id;
    std::string section_id;
    std::size_t sent_index = 0;
    bool label = false;
};

/// Questions keep file order; candidates are keyed by question id.
struct Dataset {
    Task task = Task::ASS;
    std::vector<Question> questions;
    std::unordered_map<std::string, std::vector<Candidate>> candidates;
    std::shared_ptr<const SectionStore> sections;

    const std::vector<Candidate>& candidates_of(const std::string& question_id) const;
    const Question* find_question(std::string_view id) const;
    bool answerable(const std::string& question_id) const;
    std::map<Split, std::size_t> split_counts() const;

    /// Sentence of a candidate; requires an attached section store.
    const Sentence& sentence_of(const Candidate& c) const;

    /// Subset restricted to a split; shares the section store.
    Dataset subset(Split split) const;
};

/// Reads questions.jsonl without resolving candidates. Lines carrying a
/// top-level "_meta" key are skipped.
Dataset parse_questions(std::istream& in, Task task);
Dataset read_questions(const std::string& path, Task task);

/// Number of sentences in a section, or nullopt when unknown.
using SectionSizeFn = std::function<std::optional<std::size_t>(std::string_view)>;

/// Checks candidate resolution and, for ASS, that every question has an answer.
void validate_dataset(const Dataset& dataset, const SectionSizeFn& section_size);

Dataset load_dataset(const std::string& path, std::shared_ptr<const SectionStore> sections, Task task);

void write_questions(std::ostream& out, const Dataset& dataset, const nlohmann::json& meta);

nlohmann::json question_to_json(const Question& q, const std::vector<Candidate>& candidates);

}  // namespace selqa
