#include "selqa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "selqa/error.hpp"

namespace selqa {

using nlohmann::json;

namespace {

constexpr const char* kWh[] = {"What", "How", "Who", "When", "Where", "Why"};
constexpr Topic kTopics[] = {Topic::Arts,   Topic::Country, Topic::Food,   Topic::HistoricalEvents, Topic::Movies,
                             Topic::Music,  Topic::Science, Topic::Sports, Topic::Travel,           Topic::TV};

std::string padded(char prefix, std::size_t i) {
    auto digits = std::to_string(i);
    if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
    return prefix + digits;
}

std::string filler(std::size_t i) { return padded('w', i); }

std::string key(std::size_t i) { return padded('k', i); }

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

Sentence make_sentence(const std::string& section_id, std::size_t idx, const std::vector<std::string>& words) {
    Sentence s;
    s.section_id = section_id;
    s.sent_index = idx;
    s.raw = join(words) + " .";
    s.tokens = tokenize(s.raw);
    return s;
}

std::vector<std::string> forms_of(const Tokens& tokens) {
    std::vector<std::string> out;
    for (const auto& t : tokens) out.push_back(t.form);
    return out;
}

}  // namespace

DependencyTree random_tree(std::size_t n, const std::vector<std::string>& forms, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> heads(n, DependencyTree::kRoot);
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        heads[order[i]] = static_cast<int>(order[pick(rng)]);
    }
    return DependencyTree(std::move(heads), forms);
}

SynthCorpus make_synthetic(const SynthOptions& o) {
    if (o.questions == 0 || o.sentences_per_section < 2 || o.fillers < 10 || o.emb_dim == 0)
        throw UsageError("synthetic corpus: options too small");
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<std::size_t> pick_filler(0, o.fillers - 1);
    auto fillers = [&](std::size_t n) {
        std::vector<std::string> w;
        for (std::size_t i = 0; i < n; ++i) w.push_back(filler(pick_filler(rng)));
        return w;
    };
    std::uniform_int_distribution<std::size_t> len(4, 7);

    SynthCorpus c;
    auto store = std::make_shared<SectionStore>();
    c.dataset.task = Task::ASS;
    const std::size_t n_dev = static_cast<std::size_t>(std::round(o.dev_fraction * static_cast<double>(o.questions)));
    const std::size_t n_tst = static_cast<std::size_t>(std::round(o.tst_fraction * static_cast<double>(o.questions)));

    for (std::size_t q = 0; q < o.questions; ++q) {
        Section sec;
        sec.article_id = "A" + std::to_string(q / 2);
        sec.section_id = "S" + std::to_string(q);
        sec.topic = kTopics[q % 10];
        sec.title = "section " + std::to_string(q);

        auto qwords = fillers(len(rng));
        const std::string k = key(q);
        std::uniform_int_distribution<std::size_t> answer_pos(0, o.sentences_per_section - 1);
        const std::size_t answer = answer_pos(rng);
        for (std::size_t s = 0; s < o.sentences_per_section; ++s) {
            auto words = fillers(len(rng));
            // Every sentence echoes one question filler so raw overlap does not give the answer away.
            words[0] = qwords[s % qwords.size()];
            if (s == answer) words.insert(words.begin() + 1 + static_cast<long>(rng() % (words.size() - 1)), k);
            std::shuffle(words.begin(), words.end(), rng);
            sec.sentences.push_back(make_sentence(sec.section_id, s, words));
        }

        Question question;
        question.id = "Q" + std::to_string(q);
        std::vector<std::string> qtext{kWh[q % 6]};
        qwords.insert(qwords.begin() + static_cast<long>(rng() % qwords.size()), k);
        qtext.insert(qtext.end(), qwords.begin(), qwords.end());
        question.text = join(qtext) + "?";
        question.tokens = tokenize(question.text);
        question.topic = sec.topic;
        question.origin = q % 3 == 2 ? Origin::Paraphrase : Origin::Original;
        question.qtype = classify_qtype(question.tokens);
        question.split = q < o.questions - n_dev - n_tst ? Split::TRN : q < o.questions - n_tst ? Split::DEV : Split::TST;

        std::vector<Candidate> cands;
        for (std::size_t s = 0; s < o.sentences_per_section; ++s) cands.push_back({question.id, sec.section_id, s, s == answer});
        c.dataset.candidates.emplace(question.id, std::move(cands));

        c.parses.add_question(question.id, random_tree(question.tokens.size(), forms_of(question.tokens), rng()));
        for (const auto& s : sec.sentences)
            c.parses.add_sentence(sec.section_id, s.sent_index, random_tree(s.tokens.size(), forms_of(s.tokens), rng()));

        c.dataset.questions.push_back(std::move(question));
        store->add(std::move(sec));
    }
    c.sections = store;
    c.dataset.sections = store;

    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(o.emb_dim));
    std::vector<double> common(o.emb_dim);
    double norm = 0.0;
    for (auto& v : common) {
        v = gauss(rng);
        norm += v * v;
    }
    for (auto& v : common) v /= std::sqrt(norm);

    c.embeddings = EmbeddingTable(o.emb_dim);
    std::vector<float> vec(o.emb_dim);
    auto add_noise = [&](const std::string& word, double noise, double shared) {
        for (std::size_t d = 0; d < o.emb_dim; ++d)
            vec[d] = static_cast<float>(shared * common[d] + noise * scale * gauss(rng));
        c.embeddings.add(word, vec);
    };
    for (const char* wh : kWh) add_noise(to_lower(wh), 1.0, 0.0);
    add_noise(".", 1.0, 0.0);
    add_noise("?", 1.0, 0.0);
    for (std::size_t i = 0; i < o.fillers; ++i) add_noise(filler(i), 1.0, 0.0);
    for (std::size_t i = 0; i < o.questions; ++i) add_noise(key(i), 0.3, 1.0);
    return c;
}

void write_synthetic(const SynthCorpus& c, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) throw DataError(std::string("cannot write ") + name);
        return out;
    };
    {
        auto out = open("sections.jsonl");
        for (const auto& s : c.sections->sections()) {
            json sentences = json::array();
            for (const auto& st : s.sentences) sentences.push_back(st.raw);
            out << json{{"article_id", s.article_id},
                        {"section_id", s.section_id},
                        {"topic", to_string(s.topic)},
                        {"title", s.title},
                        {"sentences", sentences}}
                       .dump()
                << '\n';
        }
    }
    {
        auto out = open("questions.jsonl");
        write_questions(out, c.dataset, nullptr);
    }
    {
        auto out = open("parses.txt");
        for (const auto& q : c.dataset.questions) write_parse_block(out, q.id, *c.parses.question(q.id));
        for (const auto& s : c.sections->sections())
            for (const auto& st : s.sentences)
                write_parse_block(out, s.section_id + " " + std::to_string(st.sent_index),
                                  *c.parses.sentence(s.section_id, st.sent_index));
    }
    {
        auto out = open("embeddings.txt");
        write_embeddings(out, c.embeddings);
    }
}

// --- grad-check fixtures -----------------------------------------------------------

namespace {

ad::Tensor<double> gaussian(std::size_t rows, std::size_t cols, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, sd);
    ad::Tensor<double> t(rows, cols);
    for (auto& v : t.storage()) v = g(rng);
    return t;
}

std::vector<long> random_ids(std::size_t n, std::size_t vocab, std::mt19937_64& rng) {
    std::uniform_int_distribution<long> pick(0, static_cast<long>(vocab) - 1);
    std::vector<long> out(n);
    for (auto& v : out) v = pick(rng);
    return out;
}

}  // namespace

LossFixture cnn_loss_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    CnnConfig cfg;
    cfg.max_len = 6;
    cfg.emb_dim = 4;
    cfg.filter_heights = {2, 3};
    cfg.filters_per_height = 3;
    cfg.hidden_dim = 4;
    cfg.trainable_embeddings = true;
    const std::size_t vocab = 12;

    LossFixture f;
    f.name = "cnn";
    f.params.add("emb", gaussian(vocab, cfg.emb_dim, 0.5, rng), true, true);
    for (auto h : cfg.filter_heights) {
        const auto k = "conv" + std::to_string(h);
        f.params.add(k + ".w", gaussian(cfg.filters_per_height, h * cfg.emb_dim, 0.5, rng));
        f.params.add(k + ".b", gaussian(1, cfg.filters_per_height, 0.1, rng));
    }
    f.params.add("hidden.w", gaussian(2 * cfg.filters_per_height * cfg.filter_heights.size(), cfg.hidden_dim, 0.5, rng));
    f.params.add("hidden.b", gaussian(1, cfg.hidden_dim, 0.1, rng));
    f.params.add("out.w", gaussian(cfg.hidden_dim, 1, 0.5, rng));
    f.params.add("out.b", gaussian(1, 1, 0.1, rng));

    std::vector<CnnExample> batch;
    std::uniform_int_distribution<std::size_t> len(3, 8);  // some sides exceed max_len
    for (int i = 0; i < 3; ++i)
        batch.push_back({random_ids(len(rng), vocab, rng), random_ids(len(rng), vocab, rng), i == 0 ? 1.0 : 0.0});

    f.loss = [cfg, batch](const ParamSet<double>& params, Gradients<double>* grads) {
        ad::Graph<double> g;
        Binder<double> b(g, params);
        auto loss = cnn_batch_loss<double>(b, cfg, batch);
        if (grads) {
            g.backward(loss);
            *grads = b.gradients();
        }
        return loss.scalar();
    };
    return f;
}

LossFixture attention_loss_fixture(AttentionVariant variant, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    GruConfig cfg;
    cfg.hidden = 3;
    cfg.emb_dim = 4;
    cfg.margin = 4.0;  // above any score gap, keeps every hinge active
    const std::size_t vocab = 12;
    const std::size_t c = cfg.output_dim();

    LossFixture f;
    f.name = variant == AttentionVariant::OneWay ? "oneway" : "ap";
    f.params.add("emb", gaussian(vocab, cfg.emb_dim, 1.0, rng), true, false);
    for (const char* dir : {"fw", "bw"}) {
        for (const char* g : {"z", "r", "n"}) f.params.add(std::string(dir) + ".W" + g, gaussian(cfg.emb_dim, cfg.hidden, 0.6, rng));
        for (const char* g : {"z", "r", "n"}) f.params.add(std::string(dir) + ".U" + g, gaussian(cfg.hidden, cfg.hidden, 0.6, rng));
        for (const char* g : {"z", "r", "n"}) f.params.add(std::string(dir) + ".b" + g, gaussian(1, cfg.hidden, 0.1, rng));
    }
    f.params.add("U", gaussian(c, c, 0.6, rng));

    std::vector<PairExample> batch;
    std::uniform_int_distribution<std::size_t> len(2, 5);
    const auto q = random_ids(len(rng), vocab, rng);
    for (int i = 0; i < 3; ++i)
        batch.push_back({i == 2 ? random_ids(len(rng), vocab, rng) : q, random_ids(len(rng), vocab, rng),
                         random_ids(len(rng), vocab, rng)});

    f.loss = [cfg, variant, batch](const ParamSet<double>& params, Gradients<double>* grads) {
        ad::Graph<double> g;
        Binder<double> b(g, params);
        auto loss = attention_batch_loss<double>(b, cfg, variant, batch);
        if (grads) {
            g.backward(loss);
            *grads = b.gradients();
        }
        return loss.scalar();
    };
    return f;
}

}  // namespace selqa
