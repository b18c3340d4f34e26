// Acceptance checks, one PASS/FAIL line per criterion.
//
//   selqa_acceptance <path-to-selrank>
//
// Criterion 9 runs only when the original corpus is supplied through
// SELQA_SECTIONS (sections.jsonl) and SELQA_QUESTIONS (ASS questions.jsonl).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "selqa/analysis.hpp"
#include "selqa/error.hpp"
#include "selqa/models.hpp"
#include "selqa/retrieval.hpp"
#include "selqa/synth.hpp"

using namespace selqa;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Status { Pass, Fail, NotApplicable };

struct Outcome {
    Status status = Status::Fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << std::fixed << v;
    return os.str();
}

std::string sci(double v) {
    std::ostringstream os;
    os.precision(2);
    os << std::scientific << v;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string selrank_exe;

// Runs selrank inside `dir` with relative paths so the echoed inputs match across runs.
void selrank(const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd \"" + dir.string() + "\" && \"" + selrank_exe + "\" --log-level warn --threads 1 " +
                            args + " > selrank.log 2>&1";
    if (std::system(cmd.c_str()) != 0)
        throw std::runtime_error("selrank " + args + " failed:\n" + slurp(dir / "selrank.log"));
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("selqa_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------- criteria

Outcome gradient_fidelity() {
    const auto start = std::chrono::steady_clock::now();
    GradCheckOptions opts;
    opts.tol = 1e-4;
    double worst = 0.0;
    std::size_t checks = 0, failed = 0, coords = 0;
    std::string first_failure;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::vector<LossFixture> fixtures = {cnn_loss_fixture(seed),
                                             attention_loss_fixture(AttentionVariant::OneWay, seed),
                                             attention_loss_fixture(AttentionVariant::AttentivePooling, seed)};
        for (auto& f : fixtures) {
            auto r = grad_check(f.loss, f.params, opts);
            ++checks;
            coords += r.checked;
            worst = std::max(worst, r.max_rel_error);
            if (!r.passed) {
                ++failed;
                if (first_failure.empty()) first_failure = f.name + " seed " + std::to_string(seed) + " at " + r.worst;
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string detail = std::to_string(checks) + " fixtures (cnn, oneway, ap x 5 seeds), " + std::to_string(coords) +
                         " coordinates, h " + sci(opts.h) + ", max rel error " + sci(worst) + " (tol 1e-4), " + fmt(secs, 1) + " s";
    if (!first_failure.empty()) detail += "; first failure " + first_failure;
    return verdict(failed == 0 && secs < 120.0, detail);
}

Outcome subtree_oracle() {
    std::mt19937_64 rng(2024);
    EmbeddingTable emb(4);
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
    std::normal_distribution<float> g;
    for (const auto& w : vocab) {
        std::vector<float> v{g(rng), g(rng), g(rng), g(rng)};
        emb.add(w, v);
    }
    std::uniform_int_distribution<std::size_t> len(1, 8), word(0, vocab.size());  // last id is OOV
    auto forms = [&](std::size_t n) {
        std::vector<std::string> f;
        for (std::size_t i = 0; i < n; ++i) {
            auto w = word(rng);
            f.push_back(w == vocab.size() ? "zz" : vocab[w]);
        }
        return f;
    };
    std::size_t compared = 0, mismatches = 0, with_shared = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto fq = forms(len(rng)), fa = forms(len(rng));
        auto tq = random_tree(fq.size(), fq, rng());
        auto ta = random_tree(fa.size(), fa, rng());
        Tokens q, a;
        for (std::size_t i = 0; i < fq.size(); ++i) q.push_back({fq[i], fq[i], i});
        for (std::size_t i = 0; i < fa.size(); ++i) a.push_back({fa[i], fa[i], i});
        auto shared = cooccurring(q, a);
        with_shared += shared.empty() ? 0 : 1;
        for (auto c : {Comparator::Form, Comparator::Embedding})
            for (auto m : {Metric::Sum, Metric::Avg, Metric::Max}) {
                SubtreeConfig cfg{c, m};
                auto got = subtree_match(tq, ta, shared, cfg, &emb);
                auto want = oracle::subtree(tq.heads(), tq.forms(), ta.heads(), ta.forms(), shared, cfg, &emb);
                ++compared;
                mismatches += got == want ? 0 : 1;
            }
    }
    return verdict(mismatches == 0, std::to_string(compared) + " triplets over 100 tree pairs (" +
                                        std::to_string(with_shared) + " with shared words), " +
                                        std::to_string(mismatches) + " mismatches");
}

RankedQuestion ranked(const std::vector<std::pair<double, bool>>& scores) {
    std::vector<ScoredCandidate> c;
    for (std::size_t i = 0; i < scores.size(); ++i) c.push_back({"S", i, scores[i].first, scores[i].second});
    return make_ranked("q", c);
}

Outcome metric_oracle() {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    auto track = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t questions = 1 + rng() % 15;
        std::vector<std::vector<oracle::Item>> sel(questions), trig(questions);
        for (std::size_t q = 0; q < questions; ++q) {
            const std::size_t n = 1 + rng() % 10;
            for (std::size_t i = 0; i < n; ++i) {
                const double score = static_cast<double>(rng() % 6) / 5.0;
                const std::string sid = "S" + std::to_string(rng() % 3);
                sel[q].push_back({score, sid, i, rng() % 3 == 0});
                trig[q].push_back({score, sid, i, rng() % 4 == 0});
            }
            if (std::none_of(sel[q].begin(), sel[q].end(), [](auto& x) { return x.label; })) sel[q][rng() % n].label = true;
        }
        if (std::none_of(trig.begin(), trig.end(),
                         [](auto& q) { return std::any_of(q.begin(), q.end(), [](auto& x) { return x.label; }); }))
            trig[0][0].label = true;

        auto m = map_mrr(oracle::to_run(sel));
        double map = 0, mrr = 0;
        for (const auto& q : sel) {
            map += oracle::ap(q);
            mrr += oracle::rr(q);
        }
        track(m.map, map / questions);
        track(m.mrr, mrr / questions);

        auto run = oracle::to_run(trig);
        const double t = static_cast<double>(rng() % 7) / 5.0 - 0.1;
        auto got = trigger_f1(run, t);
        auto want = oracle::trigger(trig, t);
        track(got.precision, want.p);
        track(got.recall, want.r);
        track(got.f1, want.f1);
        track(accuracy_answerable(run), want.acc);
    }

    // Worked examples.
    const double ap24 = average_precision(ranked({{0.9, false}, {0.8, true}, {0.7, false}, {0.6, true}}));
    const auto fixture =
        map_mrr({ranked({{0.9, true}, {0.5, false}, {0.4, true}}), ranked({{0.9, false}, {0.8, true}})});
    // Five questions, three answerable: one correct firing, one wrong firing on an
    // answerable question, one on an unanswerable question.
    const auto f1b = trigger_f1({ranked({{0.9, true}}), ranked({{0.9, false}, {0.1, true}}), ranked({{0.8, false}}),
                                 ranked({{0.2, false}, {0.1, true}}), ranked({{0.1, false}})},
                                0.5);
    const bool worked = ap24 == 0.5 && std::abs(fixture.map - 2.0 / 3.0) <= 1e-15 && fixture.mrr == 0.75 &&
                        std::abs(f1b.precision - 1.0 / 3.0) <= 1e-15 && std::abs(f1b.recall - 1.0 / 3.0) <= 1e-15 &&
                        std::abs(f1b.f1 - 1.0 / 3.0) <= 1e-15;
    return verdict(worst <= 1e-9 && worked,
                   "100 random runs, max |diff| " + sci(worst) + " (tol 1e-9); AP{2,4}=" + fmt(ap24, 6) +
                       ", fixture MAP=" + fmt(fixture.map, 6) + " MRR=" + fmt(fixture.mrr, 6) + ", trigger P/R/F1=" +
                       fmt(f1b.precision, 6) + "/" + fmt(f1b.recall, 6) + "/" + fmt(f1b.f1, 6));
}

Section make_section(const std::string& id, const std::vector<std::string>& sentences) {
    Section s;
    s.article_id = "A" + id;
    s.section_id = id;
    s.topic = Topic::Science;
    for (std::size_t i = 0; i < sentences.size(); ++i) s.sentences.push_back({id, i, sentences[i], tokenize(sentences[i])});
    return s;
}

json section_json(const Section& s) {
    json sents = json::array();
    for (const auto& st : s.sentences) sents.push_back(st.raw);
    return {{"article_id", s.article_id}, {"section_id", s.section_id}, {"topic", "Science"}, {"title", "T"},
            {"sentences", sents}};
}

Outcome retrieval_contract() {
    std::mt19937_64 rng(12);
    const std::vector<std::string> words{"river", "mountain", "city", "film",  "award", "song", "album", "war",
                                         "treaty", "king",    "team", "match", "goal",  "cell", "atom",  "star"};
    auto sentence = [&] {
        std::string s;
        const std::size_t n = 3 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) s += words[rng() % words.size()] + " ";
        return s + ".";
    };
    auto store = std::make_shared<SectionStore>();
    for (int i = 0; i < 12; ++i) {
        std::vector<std::string> sents;
        const std::size_t n = 1 + rng() % 4;
        for (std::size_t j = 0; j < n; ++j) sents.push_back(sentence());
        store->add(make_section("S" + std::to_string(i < 10 ? 0 : 1) + std::to_string(i), sents));
    }

    Dataset ass;
    ass.sections = store;
    for (int i = 0; i < 20; ++i) {
        Question q;
        q.id = "Q" + std::to_string(i);
        q.text = "What " + words[rng() % words.size()] + " " + words[rng() % words.size()] + " ?";
        q.tokens = tokenize(q.text);
        q.qtype = classify_qtype(q.tokens);
        const auto& home = store->sections()[rng() % 12];
        for (const auto& st : home.sentences) ass.candidates[q.id].push_back({q.id, home.section_id, st.sent_index, false});
        ass.candidates[q.id][rng() % home.sentences.size()].label = true;
        ass.questions.push_back(q);
    }

    auto dir = scratch("retrieval");
    {
        std::ofstream s(dir / "sections.jsonl");
        for (const auto& sec : store->sections()) s << section_json(sec).dump() << '\n';
        std::ofstream qs(dir / "questions.jsonl");
        write_questions(qs, ass, nullptr);
    }
    selrank(dir, "index build --sections sections.jsonl --out index.bin");
    selrank(dir, "triggering --dataset questions.jsonl --index index.bin --out at.jsonl --k 5");
    auto at = read_questions((dir / "at.jsonl").string(), Task::AT);

    std::size_t mismatched = 0, candidates = 0;
    for (const auto& q : ass.questions) {
        std::vector<Candidate> want;
        for (const auto& [sid, score] : oracle::top_k(*store, q.tokens, 5)) {
            const auto& sec = store->at(sid);
            for (const auto& st : sec.sentences) {
                bool label = false;
                for (const auto& c : ass.candidates_of(q.id)) label = label || (c.label && c.section_id == sid && c.sent_index == st.sent_index);
                want.push_back({q.id, sid, st.sent_index, label});
            }
        }
        const auto& got = at.candidates_of(q.id);
        candidates += got.size();
        bool same = got.size() == want.size();
        for (std::size_t i = 0; same && i < got.size(); ++i)
            same = got[i].section_id == want[i].section_id && got[i].sent_index == want[i].sent_index &&
                   got[i].label == want[i].label;
        mismatched += same ? 0 : 1;
    }

    auto index = build_index(*store);
    std::size_t prefix_failures = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        for (std::size_t i = 1 + rng() % 4; i > 0; --i) text += words[rng() % words.size()] + " ";
        auto query = tokenize(text);
        for (std::size_t k = 1; k <= 12; ++k) {
            auto small = search(index, query, k).hits;
            auto large = search(index, query, k + 1).hits;
            bool prefix = small.size() <= large.size();
            for (std::size_t i = 0; prefix && i < small.size(); ++i)
                prefix = small[i].section_id == large[i].section_id && small[i].score == large[i].score;
            prefix_failures += prefix ? 0 : 1;
        }
    }
    return verdict(mismatched == 0 && prefix_failures == 0,
                   "selrank triggering --k 5 on 12 sections: " + std::to_string(ass.questions.size() - mismatched) + "/" +
                       std::to_string(ass.questions.size()) + " questions match brute force (" +
                       std::to_string(candidates) + " candidates); prefix property violations " +
                       std::to_string(prefix_failures) + " over 50 queries x k=1..12");
}

Outcome overlap_identity() {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::string q, a;
        for (std::size_t i = 1 + rng() % 10; i > 0; --i) q += "w" + std::to_string(rng() % 12) + " ";
        for (std::size_t i = 1 + rng() % 14; i > 0; --i) a += "w" + std::to_string(rng() % 12) + " ";
        auto s = overlap(tokenize(q), tokenize(a));
        const double hm = s.omega_q + s.omega_a > 0 ? 2 * s.omega_q * s.omega_a / (s.omega_q + s.omega_a) : 0.0;
        worst = std::max(worst, std::abs(s.omega_f - hm));
        ++checked;
    }
    auto fixture = overlap(tokenize("a b c"), tokenize("b c d e"));
    return verdict(worst <= 1e-12 && fixture.omega_f == 4.0 / 7.0,
                   std::to_string(checked) + " pairs, max |w_f - H(w_q, w_a)| " + sci(worst) +
                       " (tol 1e-12); {a,b,c}x{b,c,d,e} w_f = " + fmt(fixture.omega_f, 17) + " (4/7 = " +
                       fmt(4.0 / 7.0, 17) + ")");
}

Outcome determinism() {
    SynthOptions so;
    so.questions = 16;
    so.seed = 3;
    auto corpus = make_synthetic(so);
    const std::string common =
        "--sections sections.jsonl --emb embeddings.txt --parses parses.txt --seed 11 --epochs 3 "
        "--filters-per-height 8 --hidden-dim 8 --hidden 6 --learning-rate 0.01";
    std::vector<std::string> notes;
    bool ok = true;
    double longest = 0.0;
    for (const std::string model : {"cnn-subtree", "ap"}) {
        std::string files[2][3];
        for (int rep = 0; rep < 2; ++rep) {
            auto dir = scratch("determinism_" + model + "_" + std::to_string(rep));
            write_synthetic(corpus, dir.string());
            const auto start = std::chrono::steady_clock::now();
            selrank(dir, "train --data questions.jsonl --model " + model + " --out model.bin " + common);
            longest = std::max(longest, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            selrank(dir, "score --model model.bin --data questions.jsonl --sections sections.jsonl --parses parses.txt "
                         "--split TST --out run.jsonl");
            selrank(dir, "eval --run run.jsonl --gold questions.jsonl --sections sections.jsonl "
                         "--facets topic,qtype,origin,q_length,s_length --out report.json");
            files[rep][0] = slurp(dir / "model.bin");
            files[rep][1] = slurp(dir / "run.jsonl");
            files[rep][2] = slurp(dir / "report.json");
        }
        const bool ckpt = !files[0][0].empty() && files[0][0] == files[1][0];
        const bool run = files[0][1] == files[1][1];
        const bool report = !files[0][2].empty() && files[0][2] == files[1][2];
        ok = ok && ckpt && run && report;
        notes.push_back(model + ": checkpoint " + std::to_string(files[0][0].size()) + " B " +
                        (ckpt ? "identical" : "DIFFERS") + ", run " + (run ? "identical" : "DIFFERS") + ", report " +
                        (report ? "identical" : "DIFFERS"));
    }
    ok = ok && longest < 300.0;
    return verdict(ok, notes[0] + "; " + notes[1] + "; longest training " + fmt(longest, 1) + " s");
}

// Dev MRR of a model that never saw training data.
double untrained_dev_mrr(ModelKind kind, const SynthCorpus& c, const CnnConfig& cnn, const GruConfig& gru) {
    Ranker r;
    r.kind = kind;
    r.cnn = cnn;
    r.gru = gru;
    r.vocab = Vocabulary(c.embeddings.words());
    if (r.uses_lr()) {
        r.params = init_cnn(cnn, c.embeddings, 1);
        r.lr.weights[0] = 1.0;  // rank by the raw network score
    } else {
        r.params = init_attention(gru, c.embeddings, 1);
    }
    return map_mrr(score_dataset(r, c.dataset.subset(Split::DEV), &c.parses)).mrr;
}

Outcome learning_sanity() {
    CnnConfig cnn;
    cnn.filters_per_height = 16;
    cnn.hidden_dim = 16;
    GruConfig gru;
    gru.hidden = 12;
    SubtreeConfig st;
    const ModelKind kinds[] = {ModelKind::Cnn, ModelKind::CnnSubtree, ModelKind::OneWay, ModelKind::AttentivePooling};
    std::map<ModelKind, double> worst, worst_base;
    for (auto k : kinds) {
        worst[k] = 1.0;
        worst_base[k] = 0.0;
    }

    double chance = 0.0;
    std::size_t dev = 0;
    const std::uint64_t corpus_seeds[] = {7, 8, 9};
    for (auto seed : corpus_seeds) {
        SynthOptions so;
        so.questions = 50;
        so.seed = seed;
        auto corpus = make_synthetic(so);
        cnn.emb_dim = gru.emb_dim = so.emb_dim;
        const auto dev_set = corpus.dataset.subset(Split::DEV);
        dev = dev_set.questions.size();

        // Chance MRR: a random order of n candidates with one answer.
        for (const auto& q : dev_set.questions) {
            const auto n = corpus.dataset.candidates_of(q.id).size();
            double h = 0.0;
            for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
            chance += h / static_cast<double>(n) / static_cast<double>(dev * std::size(corpus_seeds));
        }

        for (auto kind : kinds) {
            TrainConfig tc;
            tc.epochs = 20;
            tc.seed = 1;
            tc.learning_rate = 0.02;
            tc.batch_size = 4;
            tc.negatives_per_positive = (kind == ModelKind::Cnn || kind == ModelKind::CnnSubtree) ? 0 : 5;
            TrainSummary summary;
            train_ranker(kind, corpus.dataset, corpus.embeddings, &corpus.parses, cnn, gru, tc, st, &summary);
            worst[kind] = std::min(worst[kind], summary.dev_mrr);
            worst_base[kind] = std::max(worst_base[kind], untrained_dev_mrr(kind, corpus, cnn, gru));
        }
    }

    bool ok = true;
    std::string detail = "3 corpora x " + std::to_string(dev) + " dev questions, 20 epochs of batch 4 at lr 0.02, chance MRR " +
                         fmt(chance, 3) + "; lowest dev MRR (highest untrained):";
    for (auto kind : kinds) {
        ok = ok && worst[kind] >= 0.9;
        detail += " " + std::string(to_string(kind)) + " " + fmt(worst[kind], 3) + " (" + fmt(worst_base[kind], 3) + ")";
    }
    return verdict(ok, detail);
}

Outcome ap_structure() {
    std::mt19937_64 rng(8);
    std::normal_distribution<float> g;
    double worst_sym = 0.0, worst_sum = 0.0, worst_range = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng() % 8, l = 1 + rng() % 12, c = 2 + rng() % 10;
        auto random = [&](std::size_t r, std::size_t k) {
            ad::Tensor<float> t(r, k);
            for (auto& v : t.storage()) v = g(rng);
            return t;
        };
        auto q = random(m, c), a = random(l, c);
        auto u = orthogonal_init(c, c, rng());
        ad::Graph<float> gr;
        auto vq = gr.constant(q), va = gr.constant(a), vu = gr.constant(u);
        auto fwd = attentive_pooling(vq, va, vu);
        auto rev = attentive_pooling(va, vq, ad::transpose(vu));
        worst_sym = std::max(worst_sym, std::abs(double(fwd.score.scalar()) - rev.score.scalar()));
        for (auto sigma : {fwd.sigma_q, fwd.sigma_a, rev.sigma_q, rev.sigma_a}) {
            double s = 0.0;
            for (auto v : sigma.value().data()) s += v;
            worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        }
        auto one = one_way_attention(gr.constant(ad::Tensor<float>(1, c, std::vector<float>(q.row(m - 1).begin(), q.row(m - 1).end()))), va, vu);
        double s = 0.0;
        for (auto v : one.sigma_a.value().data()) s += v;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        for (double score : {double(fwd.score.scalar()), double(rev.score.scalar()), double(one.score.scalar())})
            worst_range = std::max(worst_range, std::abs(score) - 1.0);
    }
    return verdict(worst_sym <= 1e-6 && worst_sum <= 1e-6 && worst_range <= 0.0,
                   "100 float fixtures: max |ap(Q,A,U) - ap(A,Q,U^T)| " + sci(worst_sym) +
                       ", max |sum(sigma) - 1| " + sci(worst_sum) + ", all cosine scores within [-1, 1]: " +
                       (worst_range <= 0.0 ? "yes" : "no"));
}

Outcome original_data_checks() {
    const char* sections_path = std::getenv("SELQA_SECTIONS");
    const char* questions_path = std::getenv("SELQA_QUESTIONS");
    if (!sections_path || !*sections_path)
        return {Status::NotApplicable, "set SELQA_SECTIONS (and SELQA_QUESTIONS) to the original corpus to enable"};
    auto store = std::make_shared<SectionStore>(load_sections(sections_path));
    bool ok = true;
    std::string detail = "sections " + std::to_string(store->size()) + " (expect 8481)";
    ok = ok && store->size() == 8481;
    if (!questions_path || !*questions_path) return verdict(ok, detail + "; SELQA_QUESTIONS unset, remaining checks skipped");

    auto ds = load_dataset(questions_path, store, Task::ASS);
    auto splits = ds.split_counts();
    const std::size_t trn = splits[Split::TRN], dv = splits[Split::DEV], tst = splits[Split::TST];
    ok = ok && trn == 5529 && dv == 785 && tst == 1590;
    detail += "; splits " + std::to_string(trn) + "/" + std::to_string(dv) + "/" + std::to_string(tst) +
              " (expect 5529/785/1590)";

    auto index = build_index(*store);
    const double flagged = static_cast<double>(flag_suspicious(ds, index, 5).size());
    const bool susp = std::abs(flagged - 1338.0) <= 0.05 * 1338.0 && ds.questions.size() == 7904;
    ok = ok && susp;
    detail += "; suspicious " + fmt(flagged, 0) + " of " + std::to_string(ds.questions.size()) +
              " (expect 1338 +/- 5% of 7904)";

    auto report = corpus_report(ds);
    const bool omega = std::abs(report.omega_q - 40.54) <= 0.5 && std::abs(report.omega_a - 21.51) <= 0.5 &&
                       std::abs(report.omega_f - 26.18) <= 0.5;
    ok = ok && omega;
    detail += "; omega q/a/f " + fmt(report.omega_q, 2) + "/" + fmt(report.omega_a, 2) + "/" + fmt(report.omega_f, 2) +
              " (expect 40.54/21.51/26.18 +/- 0.5)";
    return verdict(ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: selqa_acceptance <path-to-selrank>\n";
        return 1;
    }
    selrank_exe = fs::absolute(argv[1]).string();
    spdlog::set_level(spdlog::level::warn);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gradient fidelity", gradient_fidelity},
        {"subtree matching oracle", subtree_oracle},
        {"metric oracle", metric_oracle},
        {"retrieval contract", retrieval_contract},
        {"overlap statistics", overlap_identity},
        {"determinism", determinism},
        {"learning sanity", learning_sanity},
        {"attentive pooling structure", ap_structure},
        {"original-data checks", original_data_checks},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Status::Fail, std::string("error: ") + e.what()};
        }
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "not applicable";
        std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << tag << " - " << o.detail << std::endl;
        failures += o.status == Status::Fail ? 1 : 0;
    }
    fs::remove_all(fs::temp_directory_path() / ("selqa_acceptance_" + std::to_string(::getpid())));
    std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
