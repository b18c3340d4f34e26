#include "selqa/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "selqa/error.hpp"

namespace selqa {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 10> kTopicNames = {
    "Arts", "Country", "Food", "Historical Events", "Movies", "Music", "Science", "Sports", "Travel", "TV"};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

bool is_punct_byte(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

Token make_token(std::string form, std::size_t index) {
    Token t;
    t.lower = to_lower(form);
    t.form = std::move(form);
    t.index = index;
    return t;
}

std::string require_string(const json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw DataError("line " + std::to_string(line) + ": missing or non-string field \"" + key + "\"");
    return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Topic t) { return kTopicNames[static_cast<std::size_t>(t)]; }

std::string_view to_string(Origin o) { return o == Origin::Original ? "original" : "paraphrase"; }

std::string_view to_string(QType q) {
    switch (q) {
        case QType::What: return "What";
        case QType::How: return "How";
        case QType::Who: return "Who";
        case QType::When: return "When";
        case QType::Where: return "Where";
        case QType::Why: return "Why";
        case QType::Misc: return "Misc";
    }
    return "Misc";
}

std::string_view to_string(Split s) {
    switch (s) {
        case Split::TRN: return "TRN";
        case Split::DEV: return "DEV";
        case Split::TST: return "TST";
    }
    return "TRN";
}

std::string_view to_string(Task t) { return t == Task::ASS ? "ASS" : "AT"; }

std::optional<Topic> parse_topic(std::string_view s) {
    for (std::size_t i = 0; i < kTopicNames.size(); ++i) {
        if (iequals(s, kTopicNames[i])) return static_cast<Topic>(i);
    }
    return std::nullopt;
}

std::optional<Origin> parse_origin(std::string_view s) {
    if (iequals(s, "original")) return Origin::Original;
    if (iequals(s, "paraphrase")) return Origin::Paraphrase;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
    if (iequals(s, "TRN")) return Split::TRN;
    if (iequals(s, "DEV")) return Split::DEV;
    if (iequals(s, "TST")) return Split::TST;
    return std::nullopt;
}

std::optional<Task> parse_task(std::string_view s) {
    if (iequals(s, "ASS")) return Task::ASS;
    if (iequals(s, "AT")) return Task::AT;
    return std::nullopt;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        auto u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

bool is_punctuation(std::string_view form) {
    return !form.empty() && std::all_of(form.begin(), form.end(), is_punct_byte);
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (start == i) break;
        std::string_view word = text.substr(start, i - start);

        std::size_t lead = 0;
        while (lead < word.size() && is_punct_byte(word[lead])) ++lead;
        if (lead == word.size()) {
            for (char c : word) out.push_back(make_token(std::string(1, c), out.size()));
            continue;
        }
        std::size_t trail = word.size();
        while (trail > lead && is_punct_byte(word[trail - 1])) --trail;

        for (std::size_t k = 0; k < lead; ++k) out.push_back(make_token(std::string(1, word[k]), out.size()));
        out.push_back(make_token(std::string(word.substr(lead, trail - lead)), out.size()));
        for (std::size_t k = trail; k < word.size(); ++k)
            out.push_back(make_token(std::string(1, word[k]), out.size()));
    }
    return out;
}

std::string join_forms(const Tokens& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t.form;
    }
    return out;
}

QType classify_qtype(const Tokens& tokens) {
    static constexpr std::array<std::pair<std::string_view, QType>, 6> kWh = {{
        {"what", QType::What},
        {"how", QType::How},
        {"who", QType::Who},
        {"when", QType::When},
        {"where", QType::Where},
        {"why", QType::Why},
    }};
    auto match = [](const Token& t) -> std::optional<QType> {
        for (const auto& [word, type] : kWh) {
            if (t.lower == word) return type;
        }
        return std::nullopt;
    };
    if (tokens.empty()) return QType::Misc;
    if (auto q = match(tokens.front())) return *q;
    for (const auto& t : tokens) {
        if (auto q = match(t)) return *q;
    }
    return QType::Misc;
}

// --- SectionStore -----------------------------------------------------------

void SectionStore::add(Section section) {
    if (by_id_.count(section.section_id))
        throw DataError("duplicate section_id \"" + section.section_id + "\"");
    by_id_.emplace(section.section_id, sections_.size());
    sections_.push_back(std::move(section));
}

const Section* SectionStore::find(std::string_view section_id) const {
    auto it = by_id_.find(std::string(section_id));
    return it == by_id_.end() ? nullptr : &sections_[it->second];
}

const Section& SectionStore::at(std::string_view section_id) const {
    const Section* s = find(section_id);
    if (!s) throw DataError("unknown section_id \"" + std::string(section_id) + "\"");
    return *s;
}

const Sentence* SectionStore::sentence(std::string_view section_id, std::size_t sent_index) const {
    const Section* s = find(section_id);
    if (!s || sent_index >= s->sentences.size()) return nullptr;
    return &s->sentences[sent_index];
}

CorpusCounts SectionStore::counts() const {
    CorpusCounts c;
    std::unordered_set<std::string> articles;
    for (const auto& s : sections_) {
        articles.insert(s.article_id);
        c.sentences += s.sentences.size();
        for (const auto& sent : s.sentences) c.tokens += sent.tokens.size();
    }
    c.articles = articles.size();
    c.sections = sections_.size();
    return c;
}

SectionStore parse_sections(std::istream& in) {
    SectionStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!j.is_object()) throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");

        Section s;
        s.article_id = require_string(j, "article_id", line_no);
        s.section_id = require_string(j, "section_id", line_no);
        s.title = j.value("title", std::string{});
        auto topic = parse_topic(require_string(j, "topic", line_no));
        if (!topic) throw DataError("line " + std::to_string(line_no) + ": unknown topic");
        s.topic = *topic;

        auto sents = j.find("sentences");
        if (sents == j.end() || !sents->is_array())
            throw DataError("line " + std::to_string(line_no) + ": missing or non-array field \"sentences\"");
        for (const auto& raw : *sents) {
            if (!raw.is_string())
                throw DataError("line " + std::to_string(line_no) + ": sentences must be strings");
            Sentence sent;
            sent.section_id = s.section_id;
            sent.sent_index = s.sentences.size();
            sent.raw = raw.get<std::string>();
            sent.tokens = tokenize(sent.raw);
            s.sentences.push_back(std::move(sent));
        }
        try {
            store.add(std::move(s));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

SectionStore load_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sections file " + path);
    return parse_sections(in);
}

// --- Dataset ----------------------------------------------------------------

const std::vector<Candidate>& Dataset::candidates_of(const std::string& question_id) const {
    static const std::vector<Candidate> kEmpty;
    auto it = candidates.find(question_id);
    return it == candidates.end() ? kEmpty : it->second;
}

const Question* Dataset::find_question(std::string_view id) const {
    for (const auto& q : questions) {
        if (q.id == id) return &q;
    }
    return nullptr;
}

bool Dataset::answerable(const std::string& question_id) const {
    const auto& cands = candidates_of(question_id);
    return std::any_of(cands.begin(), cands.end(), [](const Candidate& c) { return c.label; });
}

std::map<Split, std::size_t> Dataset::split_counts() const {
    std::map<Split, std::size_t> out{{Split::TRN, 0}, {Split::DEV, 0}, {Split::TST, 0}};
    for (const auto& q : questions) ++out[q.split];
    return out;
}

const Sentence& Dataset::sentence_of(const Candidate& c) const {
    if (!sections) throw DataError("dataset has no section store attached");
    const Sentence* s = sections->sentence(c.section_id, c.sent_index);
    if (!s)
        throw DataError("candidate (" + c.section_id + ", " + std::to_string(c.sent_index) +
                        ") does not resolve to a sentence");
    return *s;
}

Dataset Dataset::subset(Split split) const {
    Dataset out;
    out.task = task;
    out.sections = sections;
    for (const auto& q : questions) {
        if (q.split != split) continue;
        out.questions.push_back(q);
        auto it = candidates.find(q.id);
        if (it != candidates.end()) out.candidates.emplace(q.id, it->second);
    }
    return out;
}

Dataset parse_questions(std::istream& in, Task task) {
    Dataset ds;
    ds.task = task;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!j.is_object()) throw DataError("line " + std::to_string(line_no) + ": expected a JSON object");
        if (j.contains("_meta")) continue;

        Question q;
        q.id = require_string(j, "id", line_no);
        q.text = require_string(j, "text", line_no);
        q.tokens = tokenize(q.text);
        q.qtype = classify_qtype(q.tokens);

        auto topic = parse_topic(require_string(j, "topic", line_no));
        if (!topic) throw DataError("line " + std::to_string(line_no) + ": unknown topic");
        q.topic = *topic;
        auto origin = parse_origin(j.value("origin", std::string("original")));
        if (!origin) throw DataError("line " + std::to_string(line_no) + ": unknown origin");
        q.origin = *origin;
        auto split = parse_split(require_string(j, "split", line_no));
        if (!split) throw DataError("line " + std::to_string(line_no) + ": unknown split");
        q.split = *split;

        if (!seen.insert(q.id).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate question id \"" + q.id + "\"");

        auto cands = j.find("candidates");
        if (cands == j.end() || !cands->is_array())
            throw DataError("line " + std::to_string(line_no) + ": missing or non-array field \"candidates\"");
        auto& list = ds.candidates[q.id];
        for (const auto& cj : *cands) {
            if (!cj.is_object()) throw DataError("line " + std::to_string(line_no) + ": candidate must be an object");
            Candidate c;
            c.question_id = q.id;
            c.section_id = require_string(cj, "section_id", line_no);
            auto si = cj.find("sent_index");
            auto lb = cj.find("label");
            if (si == cj.end() || !si->is_number_integer() || si->get<long long>() < 0)
                throw DataError("line " + std::to_string(line_no) + ": bad candidate sent_index");
            if (lb == cj.end() || !lb->is_number_integer() || (lb->get<int>() != 0 && lb->get<int>() != 1))
                throw DataError("line " + std::to_string(line_no) + ": candidate label must be 0 or 1");
            c.sent_index = si->get<std::size_t>();
            c.label = lb->get<int>() == 1;
            list.push_back(std::move(c));
        }
        ds.questions.push_back(std::move(q));
    }
    return ds;
}

Dataset read_questions(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open questions file " + path);
    return parse_questions(in, task);
}

void validate_dataset(const Dataset& dataset, const SectionSizeFn& section_size) {
    std::vector<std::string> unanswerable;
    for (const auto& q : dataset.questions) {
        const auto& cands = dataset.candidates_of(q.id);
        for (const auto& c : cands) {
            auto n = section_size(c.section_id);
            if (!n || c.sent_index >= *n)
                throw DataError("question " + q.id + ": candidate (" + c.section_id + ", " +
                                std::to_string(c.sent_index) + ") does not resolve to a sentence");
        }
        if (dataset.task == Task::ASS && !dataset.answerable(q.id)) unanswerable.push_back(q.id);
    }
    if (!unanswerable.empty()) {
        std::string msg = "ASS questions without an answer candidate:";
        for (const auto& id : unanswerable) msg += " " + id;
        throw DataError(msg);
    }
}

Dataset load_dataset(const std::string& path, std::shared_ptr<const SectionStore> sections, Task task) {
    Dataset ds = read_questions(path, task);
    if (!sections) throw DataError("load_dataset requires a section store");
    validate_dataset(ds, [&](std::string_view id) -> std::optional<std::size_t> {
        const Section* s = sections->find(id);
        if (!s) return std::nullopt;
        return s->sentences.size();
    });
    ds.sections = std::move(sections);
    return ds;
}

json question_to_json(const Question& q, const std::vector<Candidate>& candidates) {
    json cands = json::array();
    for (const auto& c : candidates) {
        cands.push_back({{"section_id", c.section_id}, {"sent_index", c.sent_index}, {"label", c.label ? 1 : 0}});
    }
    return json{{"id", q.id},
                {"text", q.text},
                {"topic", to_string(q.topic)},
                {"origin", to_string(q.origin)},
                {"split", to_string(q.split)},
                {"candidates", std::move(cands)}};
}

void write_questions(std::ostream& out, const Dataset& dataset, const json& meta) {
    if (!meta.is_null()) out << json{{"_meta", meta}}.dump() << '\n';
    for (const auto& q : dataset.questions) out << question_to_json(q, dataset.candidates_of(q.id)).dump() << '\n';
}

}  // namespace selqa
