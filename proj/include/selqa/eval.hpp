#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selqa/corpus.hpp"

namespace selqa {

struct ScoredCandidate {
    std::string section_id;
    std::size_t sent_index = 0;
    double score = 0.0;
    bool label = false;
};

/// Candidates ordered by descending score, ties by ascending (section_id, sent_index).
struct RankedQuestion {
    std::string question_id;
    std::vector<ScoredCandidate> candidates;

    bool answerable() const;
};

/// One entry per question. Used both for selection runs (every question has
/// a positive) and triggering runs (some may have none).
using Run = std::vector<RankedQuestion>;

void sort_ranking(std::vector<ScoredCandidate>& candidates);
RankedQuestion make_ranked(std::string question_id, std::vector<ScoredCandidate> candidates);

/// Mean over positives of precision at the positive's rank. DataError without a positive.
double average_precision(const RankedQuestion& q);
double reciprocal_rank(const RankedQuestion& q);

struct MapMrr {
    double map = 0.0;
    double mrr = 0.0;
};

MapMrr map_mrr(const Run& run);

struct TriggerScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t fired = 0;
    std::size_t correct = 0;
    std::size_t answerable = 0;
    std::size_t questions = 0;
};

/// A question fires when its top candidate scores above the threshold; the
/// firing is correct when that candidate is a gold answer.
TriggerScores trigger_f1(const Run& run, double threshold);

struct SweepResult {
    double threshold = 0.0;  // may be ±infinity
    TriggerScores scores;
};

/// Tries −∞ and every distinct top score; lowest maximiser wins. Returns +∞
/// (never fire) when no threshold achieves a positive F1.
SweepResult threshold_sweep(const Run& run);

/// Fraction of answerable questions whose top candidate is a gold answer.
double accuracy_answerable(const Run& run);

enum class Facet { Topic, QType, Origin, QLength, SLength };

std::string_view to_string(Facet f);
std::optional<Facet> parse_facet(std::string_view s);

struct BucketRow {
    std::string bucket;
    std::size_t size = 0;
    std::size_t answerable = 0;
    std::optional<double> map;
    std::optional<double> mrr;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> accuracy;
};

struct Breakdown {
    Facet facet = Facet::Topic;
    std::vector<BucketRow> rows;  // only non-empty buckets
    nlohmann::json to_json() const;
};

/// Per-bucket metrics: MAP/MRR for selection; P/R/F1 at `threshold` and
/// answerable accuracy for triggering. The section-length facet needs the
/// gold dataset's section store.
Breakdown breakdown(const Run& run, Facet facet, const Dataset& gold, double threshold = 0.0);

// run.jsonl: one {"question_id","section_id","sent_index","score"} object per
// line, optionally preceded by a {"_meta": ...} line.
struct RunLine {
    std::string question_id;
    std::string section_id;
    std::size_t sent_index = 0;
    double score = 0.0;
};

std::vector<RunLine> parse_run(std::istream& in);
std::vector<RunLine> read_run(const std::string& path);
void write_run(std::ostream& out, const Run& run, const nlohmann::json& meta);

/// Groups lines by question (first-appearance order), labels them from gold
/// and sorts each ranking. Lines absent from the gold candidates are a DataError.
Run attach_gold(const std::vector<RunLine>& lines, const Dataset& gold);

/// JSON for ±infinity thresholds uses the strings "inf"/"-inf".
nlohmann::json threshold_to_json(double t);
double threshold_from_json(const nlohmann::json& j);

}  // namespace selqa
