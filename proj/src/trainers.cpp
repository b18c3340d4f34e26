#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "selqa/error.hpp"
#include "selqa/kernels.hpp"
#include "selqa/models.hpp"
#include "selqa/optim.hpp"

namespace selqa {

namespace {

void accumulate(Gradients<float>& into, const Gradients<float>& g) {
    for (const auto& [name, t] : g.dense) {
        auto [it, inserted] = into.dense.try_emplace(name, t);
        if (!inserted)
            for (std::size_t i = 0; i < t.size(); ++i) it->second[i] += t[i];
    }
    for (const auto& [name, rows] : g.sparse) {
        auto& dst = into.sparse[name];
        for (const auto& [r, v] : rows) {
            auto [it, inserted] = dst.try_emplace(r, v);
            if (!inserted)
                for (std::size_t i = 0; i < v.size(); ++i) it->second[i] += v[i];
        }
    }
}

void scale(Gradients<float>& g, float f) {
    for (auto& [name, t] : g.dense)
        for (auto& v : t.storage()) v *= f;
    for (auto& [name, rows] : g.sparse)
        for (auto& [r, v] : rows)
            for (auto& x : v) x *= f;
}

// Per-example loss and gradient, evaluated in parallel and reduced in example
// order so the result does not depend on the thread count.
template <typename Ex, typename LossFn>
double batch_step(const ParamSet<float>& params, std::span<const Ex> batch, const LossFn& loss_of,
                  Gradients<float>& total) {
    std::vector<Gradients<float>> grads(batch.size());
    std::vector<double> losses(batch.size());
    kernels::parallel_for(batch.size(), [&](std::size_t i) {
        ad::Graph<float> g;
        Binder<float> b(g, params);
        auto loss = loss_of(b, batch[i]);
        losses[i] = loss.scalar();
        g.backward(loss);
        grads[i] = b.gradients();
    });
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        accumulate(total, grads[i]);
        sum += losses[i];
    }
    scale(total, 1.0f / static_cast<float>(batch.size()));
    return sum / static_cast<double>(batch.size());
}

template <typename Ex, typename LossFn>
double mean_loss(const ParamSet<float>& params, const std::vector<Ex>& examples, const LossFn& loss_of) {
    std::vector<double> losses(examples.size());
    kernels::parallel_for(examples.size(), [&](std::size_t i) {
        ad::Graph<float> g;
        Binder<float> b(g, params, true);
        losses[i] = loss_of(b, examples[i]).scalar();
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    return examples.empty() ? 0.0 : sum / static_cast<double>(examples.size());
}

template <typename Ex, typename LossFn>
void run_training(ParamSet<float>& params, const std::vector<Ex>& examples, const TrainConfig& train, double l2,
                  const LossFn& loss_of, TrainLog* log, const char* what) {
    train.validate();
    if (examples.empty()) throw DataError(std::string(what) + ": no training examples");
    RmspropState state{train.learning_rate, train.decay, train.eps, {}};
    std::mt19937_64 rng(train.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    if (log) log->initial_loss = mean_loss(params, examples, loss_of);

    std::vector<Ex> batch;
    for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
            const std::size_t end = std::min(order.size(), start + train.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
            Gradients<float> grads;
            const double loss = batch_step<Ex>(params, batch, loss_of, grads);
            if (!std::isfinite(loss)) throw NumericError(std::string(what) + ": non-finite training loss");
            total += loss * static_cast<double>(batch.size());
            rmsprop_step(state, params, grads, l2);
        }
        const double epoch_loss = total / static_cast<double>(examples.size());
        spdlog::debug("{} epoch {} loss {:.6f}", what, epoch + 1, epoch_loss);
        if (log) log->epoch_loss.push_back(epoch_loss);
    }
}

}  // namespace

std::vector<CnnExample> cnn_examples(const Dataset& data, const Vocabulary& vocab, std::size_t max_len) {
    std::vector<CnnExample> out;
    for (const auto& q : data.questions) {
        auto qids = vocab.ids(q.tokens, max_len);
        if (qids.empty()) continue;
        for (const auto& c : data.candidates_of(q.id)) {
            auto aids = vocab.ids(data.sentence_of(c).tokens, max_len);
            if (aids.empty()) continue;
            out.push_back({qids, std::move(aids), c.label ? 1.0 : 0.0});
        }
    }
    return out;
}

std::vector<PairExample> pair_examples(const Dataset& data, const Vocabulary& vocab, std::size_t negatives_per_positive,
                                       std::uint64_t seed, std::size_t* skipped) {
    std::mt19937_64 rng(seed);
    std::vector<PairExample> out;
    std::size_t skip = 0;
    for (const auto& q : data.questions) {
        std::vector<std::vector<long>> pos, neg;
        for (const auto& c : data.candidates_of(q.id)) {
            auto ids = vocab.ids(data.sentence_of(c).tokens);
            if (ids.empty()) continue;
            (c.label ? pos : neg).push_back(std::move(ids));
        }
        if (q.tokens.empty() || pos.empty() || neg.empty()) {
            ++skip;
            spdlog::warn("question {} skipped: needs a positive and a negative candidate", q.id);
            continue;
        }
        auto qids = vocab.ids(q.tokens);
        std::vector<std::size_t> pool(neg.size());
        std::iota(pool.begin(), pool.end(), 0);
        for (const auto& p : pos) {
            std::size_t take = pool.size();
            if (negatives_per_positive != 0 && negatives_per_positive < pool.size()) {
                take = negatives_per_positive;
                // Partial Fisher-Yates: the first `take` slots form the sample.
                for (std::size_t i = 0; i < take; ++i) {
                    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
                    std::swap(pool[i], pool[pick(rng)]);
                }
            }
            for (std::size_t i = 0; i < take; ++i) out.push_back({qids, p, neg[pool[i]]});
        }
    }
    if (skipped) *skipped = skip;
    return out;
}

void train_cnn(ParamSet<float>& params, const std::vector<CnnExample>& examples, const CnnConfig& config,
               const TrainConfig& train, TrainLog* log) {
    config.validate();
    auto loss_of = [&config](Binder<float>& b, const CnnExample& ex) {
        return ad::bce_with_logits(cnn_logit<float>(b, config, ex.question, ex.answer), static_cast<float>(ex.label));
    };
    run_training(params, examples, train, 0.0, loss_of, log, "cnn");
}

void train_attention(ParamSet<float>& params, const Dataset& data, const Vocabulary& vocab, AttentionVariant variant,
                     const GruConfig& config, const TrainConfig& train, TrainLog* log) {
    config.validate();
    std::size_t skipped = 0;
    auto pairs = pair_examples(data, vocab, train.negatives_per_positive, train.seed, &skipped);
    if (log) log->skipped_questions = skipped;
    auto loss_of = [&config, variant](Binder<float>& b, const PairExample& ex) {
        std::span<const PairExample> one(&ex, 1);
        return attention_batch_loss<float>(b, config, variant, one);
    };
    run_training(params, pairs, train, config.l2, loss_of, log, "attention");
}

namespace {

std::vector<std::string> dataset_vocabulary(const Dataset& data, const EmbeddingTable& table) {
    std::set<std::size_t> rows;
    auto collect = [&](const Tokens& tokens) {
        for (const auto& t : tokens)
            if (auto r = table.row(t.form)) rows.insert(*r);
    };
    for (const auto& q : data.questions) {
        collect(q.tokens);
        for (const auto& c : data.candidates_of(q.id)) collect(data.sentence_of(c).tokens);
    }
    std::vector<std::string> words;
    words.reserve(rows.size());
    for (auto r : rows) words.push_back(table.words()[r]);
    return words;
}

EmbeddingTable restrict_table(const EmbeddingTable& table, const Vocabulary& vocab) {
    EmbeddingTable out(table.dim());
    for (const auto& w : vocab.words()) out.add(w, table.vector(*table.row(w)));
    return out;
}

IdfTable training_idf(const Dataset& trn) {
    std::set<std::pair<std::string, std::size_t>> seen;
    std::vector<const Tokens*> sentences;
    for (const auto& q : trn.questions) {
        for (const auto& c : trn.candidates_of(q.id)) {
            if (seen.emplace(c.section_id, c.sent_index).second) sentences.push_back(&trn.sentence_of(c).tokens);
        }
    }
    return build_idf(sentences);
}

}  // namespace

Ranker train_ranker(ModelKind kind, const Dataset& data, const EmbeddingTable& table, const ParseBank* parses,
                    const CnnConfig& cnn, const GruConfig& gru, const TrainConfig& train, const SubtreeConfig& subtree,
                    TrainSummary* summary) {
    train.validate();
    const Dataset trn = data.subset(Split::TRN);
    if (trn.questions.empty()) throw DataError("train: dataset has no TRN questions");
    if (kind == ModelKind::CnnSubtree && !parses) throw DataError("cnn-subtree: dependency parses are required");

    Ranker r;
    r.kind = kind;
    r.cnn = cnn;
    r.gru = gru;
    r.train = train;
    r.subtree = subtree;
    r.threshold = train.threshold;
    r.vocab = Vocabulary(dataset_vocabulary(data, table));
    const EmbeddingTable sub = restrict_table(table, r.vocab);
    TrainSummary local;
    TrainSummary& s = summary ? *summary : local;

    if (r.uses_lr()) {
        r.params = init_cnn(cnn, sub, train.seed);
        train_cnn(r.params, cnn_examples(trn, r.vocab, cnn.max_len), cnn, train, &s.network);
        r.idf = training_idf(trn);
        r.embedding_table();

        std::vector<std::pair<const Question*, const Candidate*>> rows;
        for (const auto& q : trn.questions)
            for (const auto& c : trn.candidates_of(q.id)) rows.emplace_back(&q, &c);
        std::vector<FeatureVector> feats(rows.size());
        std::vector<int> labels(rows.size());
        kernels::parallel_for(rows.size(), [&](std::size_t i) {
            const auto& [q, c] = rows[i];
            const DependencyTree* qt = nullptr;
            const DependencyTree* at = nullptr;
            if (kind == ModelKind::CnnSubtree) {
                qt = parses->question(q->id);
                at = parses->sentence(c->section_id, c->sent_index);
            }
            feats[i] = r.features(q->tokens, trn.sentence_of(*c).tokens, qt, at);
            labels[i] = c->label ? 1 : 0;
        });
        r.lr = lr_train(feats, labels);
    } else {
        const auto variant =
            kind == ModelKind::OneWay ? AttentionVariant::OneWay : AttentionVariant::AttentivePooling;
        r.params = init_attention(gru, sub, train.seed);
        train_attention(r.params, trn, r.vocab, variant, gru, train, &s.network);
    }

    const Dataset dev = data.subset(Split::DEV);
    if (!dev.questions.empty()) {
        Run run = score_dataset(r, dev, parses);
        Run answerable;
        for (const auto& q : run)
            if (q.answerable()) answerable.push_back(q);
        if (!answerable.empty()) s.dev_mrr = map_mrr(answerable).mrr;
        r.threshold = threshold_sweep(run).threshold;
        s.threshold_tuned = true;
    }
    return r;
}

Run score_dataset(const Ranker& ranker, const Dataset& data, const ParseBank* parses) {
    ranker.embedding_table();
    Run run(data.questions.size());
    kernels::parallel_for(data.questions.size(), [&](std::size_t i) {
        const auto& q = data.questions[i];
        run[i] = make_ranked(q.id, ranker.predict_run(data, q, parses));
    });
    return run;
}

}  // namespace selqa
