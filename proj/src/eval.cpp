#include "selqa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "selqa/analysis.hpp"
#include "selqa/error.hpp"

namespace selqa {

using nlohmann::json;

bool RankedQuestion::answerable() const {
    return std::any_of(candidates.begin(), candidates.end(), [](const ScoredCandidate& c) { return c.label; });
}

void sort_ranking(std::vector<ScoredCandidate>& candidates) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.section_id != b.section_id) return a.section_id < b.section_id;
        return a.sent_index < b.sent_index;
    });
}

RankedQuestion make_ranked(std::string question_id, std::vector<ScoredCandidate> candidates) {
    sort_ranking(candidates);
    return {std::move(question_id), std::move(candidates)};
}

double average_precision(const RankedQuestion& q) {
    double total = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < q.candidates.size(); ++r) {
        if (!q.candidates[r].label) continue;
        ++hits;
        total += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    if (hits == 0) throw DataError("average_precision: question " + q.question_id + " has no positive candidate");
    return total / static_cast<double>(hits);
}

double reciprocal_rank(const RankedQuestion& q) {
    for (std::size_t r = 0; r < q.candidates.size(); ++r) {
        if (q.candidates[r].label) return 1.0 / static_cast<double>(r + 1);
    }
    throw DataError("reciprocal_rank: question " + q.question_id + " has no positive candidate");
}

MapMrr map_mrr(const Run& run) {
    if (run.empty()) throw DataError("map_mrr: empty run");
    double ap = 0.0, rr = 0.0;
    for (const auto& q : run) {
        ap += average_precision(q);
        rr += reciprocal_rank(q);
    }
    const double n = static_cast<double>(run.size());
    return {ap / n, rr / n};
}

TriggerScores trigger_f1(const Run& run, double threshold) {
    TriggerScores s;
    s.questions = run.size();
    for (const auto& q : run) {
        if (q.answerable()) ++s.answerable;
        if (q.candidates.empty()) continue;
        const auto& top = q.candidates.front();
        if (top.score > threshold) {
            ++s.fired;
            if (top.label) ++s.correct;
        }
    }
    s.precision = s.fired ? static_cast<double>(s.correct) / static_cast<double>(s.fired) : 0.0;
    s.recall = s.answerable ? static_cast<double>(s.correct) / static_cast<double>(s.answerable) : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    return s;
}

SweepResult threshold_sweep(const Run& run) {
    std::set<double> candidates{-std::numeric_limits<double>::infinity()};
    for (const auto& q : run) {
        if (!q.candidates.empty()) candidates.insert(q.candidates.front().score);
    }
    SweepResult best;
    best.threshold = std::numeric_limits<double>::infinity();
    best.scores = trigger_f1(run, best.threshold);
    for (double t : candidates) {
        auto s = trigger_f1(run, t);
        if (s.f1 > best.scores.f1) {
            best.threshold = t;
            best.scores = s;
        }
    }
    return best;
}

double accuracy_answerable(const Run& run) {
    std::size_t answerable = 0, correct = 0;
    for (const auto& q : run) {
        if (!q.answerable()) continue;
        ++answerable;
        if (q.candidates.front().label) ++correct;
    }
    if (answerable == 0) throw DataError("accuracy_answerable: no answerable question in the run");
    return static_cast<double>(correct) / static_cast<double>(answerable);
}

std::string_view to_string(Facet f) {
    switch (f) {
        case Facet::Topic: return "topic";
        case Facet::QType: return "qtype";
        case Facet::Origin: return "origin";
        case Facet::QLength: return "q_length";
        case Facet::SLength: return "s_length";
    }
    return "topic";
}

std::optional<Facet> parse_facet(std::string_view s) {
    for (auto f : {Facet::Topic, Facet::QType, Facet::Origin, Facet::QLength, Facet::SLength}) {
        if (s == to_string(f)) return f;
    }
    return std::nullopt;
}

namespace {

// Section the question was written against: its first answer's section, or
// the first candidate's when it has no answer.
const Section* home_section(const Dataset& gold, const Question& q) {
    const auto& cands = gold.candidates_of(q.id);
    if (cands.empty() || !gold.sections) return nullptr;
    auto it = std::find_if(cands.begin(), cands.end(), [](const Candidate& c) { return c.label; });
    const auto& c = it == cands.end() ? cands.front() : *it;
    return gold.sections->find(c.section_id);
}

std::pair<std::string, int> bucket_of(Facet facet, const Question& q, const Dataset& gold) {
    switch (facet) {
        case Facet::Topic: return {std::string(to_string(q.topic)), static_cast<int>(q.topic)};
        case Facet::QType: return {std::string(to_string(q.qtype)), static_cast<int>(q.qtype)};
        case Facet::Origin: return {std::string(to_string(q.origin)), static_cast<int>(q.origin)};
        case Facet::QLength: {
            auto b = length_bucket(q.tokens.size(), 1).first;
            return {std::string(to_string(b)), static_cast<int>(b)};
        }
        case Facet::SLength: {
            const Section* s = home_section(gold, q);
            if (!s) throw DataError("breakdown: section length unavailable for question " + q.id);
            auto b = length_bucket(1, s->sentences.size()).second;
            return {std::string(to_string(b)), static_cast<int>(b)};
        }
    }
    return {"", 0};
}

}  // namespace

Breakdown breakdown(const Run& run, Facet facet, const Dataset& gold, double threshold) {
    std::unordered_map<std::string, const Question*> questions;
    for (const auto& q : gold.questions) questions.emplace(q.id, &q);

    std::map<int, std::pair<std::string, Run>> buckets;
    for (const auto& rq : run) {
        auto it = questions.find(rq.question_id);
        if (it == questions.end()) throw DataError("breakdown: question " + rq.question_id + " missing from gold");
        auto [name, order] = bucket_of(facet, *it->second, gold);
        auto& slot = buckets[order];
        slot.first = name;
        slot.second.push_back(rq);
    }

    Breakdown out;
    out.facet = facet;
    for (auto& [order, entry] : buckets) {
        BucketRow row;
        row.bucket = entry.first;
        const Run& sub = entry.second;
        row.size = sub.size();
        for (const auto& q : sub) row.answerable += q.answerable() ? 1 : 0;
        if (gold.task == Task::ASS) {
            auto m = map_mrr(sub);
            row.map = m.map;
            row.mrr = m.mrr;
        } else {
            auto t = trigger_f1(sub, threshold);
            row.precision = t.precision;
            row.recall = t.recall;
            row.f1 = t.f1;
            if (row.answerable) row.accuracy = accuracy_answerable(sub);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

json Breakdown::to_json() const {
    json rows_json = json::array();
    for (const auto& r : rows) {
        json j{{"bucket", r.bucket}, {"size", r.size}, {"answerable", r.answerable}};
        if (r.map) j["MAP"] = *r.map;
        if (r.mrr) j["MRR"] = *r.mrr;
        if (r.precision) j["P"] = *r.precision;
        if (r.recall) j["R"] = *r.recall;
        if (r.f1) j["F1"] = *r.f1;
        if (r.accuracy) j["accuracy_answerable"] = *r.accuracy;
        rows_json.push_back(std::move(j));
    }
    return json{{"facet", to_string(facet)}, {"buckets", std::move(rows_json)}};
}

std::vector<RunLine> parse_run(std::istream& in) {
    std::vector<RunLine> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("run line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (j.contains("_meta")) continue;
        try {
            RunLine r;
            r.question_id = j.at("question_id").get<std::string>();
            r.section_id = j.at("section_id").get<std::string>();
            r.sent_index = j.at("sent_index").get<std::size_t>();
            r.score = j.at("score").get<double>();
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw DataError("run line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<RunLine> read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file " + path);
    return parse_run(in);
}

void write_run(std::ostream& out, const Run& run, const json& meta) {
    if (!meta.is_null()) out << json{{"_meta", meta}}.dump() << '\n';
    for (const auto& q : run) {
        for (const auto& c : q.candidates) {
            out << json{{"question_id", q.question_id},
                        {"section_id", c.section_id},
                        {"sent_index", c.sent_index},
                        {"score", c.score}}
                       .dump()
                << '\n';
        }
    }
}

Run attach_gold(const std::vector<RunLine>& lines, const Dataset& gold) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<ScoredCandidate>> grouped;
    for (const auto& l : lines) {
        if (!gold.find_question(l.question_id) && !gold.candidates.count(l.question_id))
            throw DataError("run: question " + l.question_id + " is not in the gold data");
        const auto& cands = gold.candidates_of(l.question_id);
        auto it = std::find_if(cands.begin(), cands.end(), [&](const Candidate& c) {
            return c.section_id == l.section_id && c.sent_index == l.sent_index;
        });
        if (it == cands.end())
            throw DataError("run: (" + l.section_id + ", " + std::to_string(l.sent_index) +
                            ") is not a gold candidate of question " + l.question_id);
        auto [slot, inserted] = grouped.try_emplace(l.question_id);
        if (inserted) order.push_back(l.question_id);
        slot->second.push_back({l.section_id, l.sent_index, l.score, it->label});
    }
    Run run;
    run.reserve(order.size());
    for (auto& id : order) run.push_back(make_ranked(id, std::move(grouped[id])));
    return run;
}

json threshold_to_json(double t) {
    if (std::isinf(t)) return t > 0 ? json("inf") : json("-inf");
    return json(t);
}

double threshold_from_json(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw DataError("threshold: unrecognised value " + s);
    }
    return j.get<double>();
}

}  // namespace selqa
