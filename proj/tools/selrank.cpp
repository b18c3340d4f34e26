#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "selqa/analysis.hpp"
#include "selqa/checkpoint.hpp"
#include "selqa/config.hpp"
#include "selqa/corpus.hpp"
#include "selqa/error.hpp"
#include "selqa/eval.hpp"
#include "selqa/kernels.hpp"
#include "selqa/models.hpp"
#include "selqa/optim.hpp"
#include "selqa/retrieval.hpp"
#include "selqa/synth.hpp"

using namespace selqa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Options that double as config keys. Values given on the command line
// override the --config file.
class KeyedFlags {
  public:
    void add(CLI::App* sub, const std::string& key, const std::string& help) {
        std::string flag = "--" + key;
        for (auto& ch : flag)
            if (ch == '_') ch = '-';
        auto* opt = sub->add_option(flag, values_[sub->get_name() + "/" + key], help);
        registered_.push_back({sub, key, opt});
    }

    void apply(Config& cfg) const {
        for (const auto& r : registered_) {
            if (r.opt->count() > 0) cfg.set(r.key, values_.at(r.sub->get_name() + "/" + r.key));
        }
    }

  private:
    struct Entry {
        CLI::App* sub;
        std::string key;
        CLI::Option* opt;
    };
    std::map<std::string, std::string> values_;
    std::vector<Entry> registered_;
};

std::shared_ptr<const SectionStore> open_sections(const std::string& path) {
    auto store = std::make_shared<SectionStore>(load_sections(path));
    const auto c = store->counts();
    spdlog::info("sections: {} articles, {} sections, {} sentences, {} tokens", c.articles, c.sections, c.sentences,
                 c.tokens);
    return store;
}

Task task_of(const Config& cfg) {
    auto t = parse_task(cfg.get_string("task", "ass"));
    if (!t) throw UsageError("task must be ass or at");
    return *t;
}

Dataset dataset_against_index(const std::string& path, const InvertedIndex& index, Task task) {
    Dataset ds = read_questions(path, task);
    validate_dataset(ds, [&](std::string_view id) -> std::optional<std::size_t> {
        auto ord = index.ordinal(id);
        if (!ord) return std::nullopt;
        return index.sentence_count(*ord);
    });
    return ds;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

void emit_json(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

std::vector<Facet> parse_facets(const std::string& list) {
    std::vector<Facet> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        if (item == "length") {
            out.push_back(Facet::QLength);
            out.push_back(Facet::SLength);
            continue;
        }
        auto f = parse_facet(item);
        if (!f) throw UsageError("unknown facet " + item);
        out.push_back(*f);
    }
    return out;
}

json trigger_json(const TriggerScores& s) {
    return json{{"P", s.precision},  {"R", s.recall},         {"F1", s.f1},
                {"fired", s.fired},  {"correct", s.correct},  {"answerable", s.answerable},
                {"questions", s.questions}};
}

json evaluate(const Run& run, const Dataset& gold, double threshold, const std::vector<Facet>& facets) {
    json report{{"task", to_string(gold.task)}, {"questions", run.size()}};
    if (gold.task == Task::ASS) {
        auto m = map_mrr(run);
        report["MAP"] = m.map;
        report["MRR"] = m.mrr;
    } else {
        report["threshold"] = threshold_to_json(threshold);
        report.update(trigger_json(trigger_f1(run, threshold)));
        bool any = std::any_of(run.begin(), run.end(), [](const RankedQuestion& q) { return q.answerable(); });
        report["accuracy_answerable"] = any ? json(accuracy_answerable(run)) : json(nullptr);
    }
    json b = json::object();
    for (auto f : facets) b[std::string(to_string(f))] = breakdown(run, f, gold, threshold).to_json()["buckets"];
    report["breakdowns"] = std::move(b);
    return report;
}

json train_summary_json(const TrainSummary& s) {
    return json{{"initial_loss", s.network.initial_loss},
                {"epoch_loss", s.network.epoch_loss},
                {"skipped_questions", s.network.skipped_questions},
                {"dev_mrr", s.dev_mrr},
                {"threshold_tuned", s.threshold_tuned}};
}

std::string version_text() {
    std::ostringstream v;
    v << "selrank 1.0.0\n"
      << "index format " << kIndexMagic << "\n"
      << "checkpoint format " << kCheckpointMagic << " version " << kCheckpointVersion;
    return v.str();
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return 1;
    if (dynamic_cast<const NumericError*>(&e)) return 3;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("selrank");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);

    CLI::App app{"Answer sentence selection and answer triggering toolkit"};
    app.set_version_flag("--version", version_text());
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 1;
    std::string config_path, log_level = "info";
    app.add_option("--threads", threads, "Worker threads for parallel-safe stages")->check(CLI::PositiveNumber);
    app.add_option("--config", config_path, "key=value configuration file")->check(CLI::ExistingFile);
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

    KeyedFlags keyed;
    std::map<std::string, std::string> path;
    auto path_opt = [&](CLI::App* sub, const std::string& name, const std::string& help, bool required) {
        auto* o = sub->add_option("--" + name, path[sub->get_name() + "/" + name], help);
        if (required) o->required();
        return o;
    };
    auto P = [&](CLI::App* sub, const std::string& name) { return path[sub->get_name() + "/" + name]; };

    auto* index_cmd = app.add_subcommand("index", "Inverted index over sections");
    index_cmd->require_subcommand(1);
    auto* index_build = index_cmd->add_subcommand("build", "Build an index from sections.jsonl");
    path_opt(index_build, "sections", "sections.jsonl", true);
    path_opt(index_build, "out", "index.bin", true);

    auto* suspicious = app.add_subcommand("suspicious", "Flag questions whose answer section misses the top-k");
    path_opt(suspicious, "dataset", "ASS questions.jsonl", true);
    path_opt(suspicious, "index", "index.bin", true);
    path_opt(suspicious, "out", "report.json (stdout when omitted)", false);
    keyed.add(suspicious, "k", "Sections retrieved per question (default 5)");

    auto* triggering = app.add_subcommand("triggering", "Generate an answer-triggering dataset");
    path_opt(triggering, "dataset", "ASS questions.jsonl", true);
    path_opt(triggering, "index", "index.bin", true);
    path_opt(triggering, "out", "AT questions.jsonl", true);
    keyed.add(triggering, "k", "Sections retrieved per question (default 5)");

    auto* stats = app.add_subcommand("stats", "Corpus statistics");
    path_opt(stats, "dataset", "questions.jsonl", true);
    path_opt(stats, "sections", "sections.jsonl", true);
    path_opt(stats, "out", "report.json (stdout when omitted)", false);
    keyed.add(stats, "task", "ass|at");

    auto* train = app.add_subcommand("train", "Train a ranker on the TRN split; DEV tunes the threshold");
    path_opt(train, "data", "questions.jsonl", true);
    path_opt(train, "sections", "sections.jsonl", true);
    path_opt(train, "emb", "embedding file", true);
    path_opt(train, "parses", "dependency parses (cnn-subtree)", false);
    path_opt(train, "out", "model.bin", true);
    for (const char* k : {"model", "task", "seed", "epochs", "batch_size", "learning_rate", "decay", "eps",
                          "negatives_per_positive", "threshold", "max_len", "emb_dim", "filter_heights",
                          "filters_per_height", "hidden_dim", "trainable_embeddings", "pooling", "hidden", "margin",
                          "l2", "comparator", "metric"})
        keyed.add(train, k, "");

    auto* score = app.add_subcommand("score", "Score every candidate with a trained model");
    path_opt(score, "model", "model.bin", true);
    path_opt(score, "data", "questions.jsonl", true);
    path_opt(score, "sections", "sections.jsonl", true);
    path_opt(score, "parses", "dependency parses (cnn-subtree)", false);
    path_opt(score, "out", "run.jsonl", true);
    std::string score_split;
    score->add_option("--split", score_split, "Restrict to TRN, DEV or TST");
    keyed.add(score, "task", "ass|at");

    auto* eval = app.add_subcommand("eval", "Evaluate a run against gold labels");
    path_opt(eval, "run", "run.jsonl", true);
    path_opt(eval, "gold", "questions.jsonl", true);
    path_opt(eval, "sections", "sections.jsonl (needed by the s_length facet)", false);
    path_opt(eval, "sweep", "DEV run.jsonl for threshold tuning", false);
    path_opt(eval, "out", "report.json (stdout when omitted)", false);
    std::string facets_arg;
    eval->add_option("--facets", facets_arg, "Comma list of topic,qtype,origin,length,q_length,s_length");
    keyed.add(eval, "task", "ass|at");
    keyed.add(eval, "threshold", "Triggering threshold");

    auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every model loss");
    std::string gc_model = "all";
    std::size_t gc_fixtures = 5;
    GradCheckOptions gc_opts;
    gradcheck->add_option("--model", gc_model, "cnn|oneway|ap|all")->check(CLI::IsMember({"cnn", "oneway", "ap", "all"}));
    gradcheck->add_option("--fixtures", gc_fixtures, "Seeded fixtures per model")->check(CLI::PositiveNumber);
    gradcheck->add_option("--step", gc_opts.h, "Finite-difference step");
    gradcheck->add_option("--tol", gc_opts.tol, "Relative tolerance");
    keyed.add(gradcheck, "seed", "First fixture seed");

    auto* demo = app.add_subcommand("demo", "End-to-end run on a generated synthetic corpus");
    std::string demo_dir = (fs::temp_directory_path() / "selrank-demo").string();
    demo->add_option("--workdir", demo_dir, "Output directory");
    keyed.add(demo, "seed", "Corpus and training seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        auto level = spdlog::level::from_str(log_level);
        spdlog::set_level(level);
        kernels::set_threads(threads);

        Config cfg;
        if (!config_path.empty()) cfg.merge_file(config_path);
        keyed.apply(cfg);
        auto echo = [&](const std::string& command, const json& inputs) {
            json j = cfg.to_json();
            j["command"] = command;
            j["inputs"] = inputs;
            j["threads"] = threads;
            return j;
        };

        if (index_build->parsed()) {
            auto store = open_sections(P(index_build, "sections"));
            auto index = build_index(*store);
            save_index(P(index_build, "out"), index, echo("index build", {{"sections", P(index_build, "sections")}}));
            spdlog::info("indexed {} sections, {} terms, avgdl {:.3f}", index.num_docs(), index.num_terms(),
                         index.avgdl());
        } else if (suspicious->parsed()) {
            const std::size_t k = cfg.get_size("k", 5);
            if (k == 0) throw UsageError("--k must be positive");
            auto index = load_index(P(suspicious, "index"));
            auto ds = dataset_against_index(P(suspicious, "dataset"), index, Task::ASS);
            auto flagged = flag_suspicious(ds, index, k);
            json report{{"config", echo("suspicious", {{"dataset", P(suspicious, "dataset")},
                                                       {"index", P(suspicious, "index")}})},
                        {"k", k},
                        {"questions", ds.questions.size()},
                        {"suspicious", flagged.size()},
                        {"ids", flagged}};
            spdlog::info("{} of {} questions flagged suspicious", flagged.size(), ds.questions.size());
            emit_json(report, P(suspicious, "out"));
        } else if (triggering->parsed()) {
            const std::size_t k = cfg.get_size("k", 5);
            if (k == 0) throw UsageError("--k must be positive");
            auto index = load_index(P(triggering, "index"));
            auto ds = dataset_against_index(P(triggering, "dataset"), index, Task::ASS);
            auto at = generate_triggering(ds, index, k);
            const double frac = answerable_fraction(at);
            auto out = open_out(P(triggering, "out"));
            json meta = echo("triggering", {{"dataset", P(triggering, "dataset")}, {"index", P(triggering, "index")}});
            meta["k"] = k;
            meta["answerable_fraction"] = frac;
            write_questions(out, at, meta);
            spdlog::info("answer triggering: {} questions, {:.2f}% answerable", at.questions.size(), 100.0 * frac);
        } else if (stats->parsed()) {
            auto store = open_sections(P(stats, "sections"));
            auto ds = load_dataset(P(stats, "dataset"), store, task_of(cfg));
            json report = corpus_report(ds).to_json();
            report["config"] = echo("stats", {{"dataset", P(stats, "dataset")}, {"sections", P(stats, "sections")}});
            emit_json(report, P(stats, "out"));
        } else if (train->parsed()) {
            auto kind = parse_model_kind(cfg.get_string("model", "cnn-subtree"));
            if (!kind) throw UsageError("--model must be cnn, cnn-subtree, oneway or ap");
            auto store = open_sections(P(train, "sections"));
            auto ds = load_dataset(P(train, "data"), store, task_of(cfg));
            auto table = load_embeddings(P(train, "emb"));
            if (!cfg.has("emb_dim")) cfg.set("emb_dim", std::to_string(table.dim()));
            std::optional<ParseBank> parses;
            if (!P(train, "parses").empty()) parses = load_parses(P(train, "parses"));
            auto cnn = cnn_config(cfg);
            auto gru = gru_config(cfg);
            auto tc = train_config(cfg, *kind);
            auto sub = subtree_config(cfg);
            TrainSummary summary;
            auto ranker = train_ranker(*kind, ds, table, parses ? &*parses : nullptr, cnn, gru, tc, sub, &summary);
            ranker.run_config = echo("train", {{"data", P(train, "data")},
                                               {"sections", P(train, "sections")},
                                               {"emb", P(train, "emb")},
                                               {"parses", P(train, "parses")}});
            save_checkpoint(P(train, "out"), ranker.to_checkpoint());
            spdlog::info("trained {}: {}", to_string(*kind), train_summary_json(summary).dump());
        } else if (score->parsed()) {
            auto ranker = Ranker::from_checkpoint(load_checkpoint(P(score, "model")));
            auto store = open_sections(P(score, "sections"));
            auto ds = load_dataset(P(score, "data"), store, task_of(cfg));
            if (!score_split.empty()) {
                auto s = parse_split(score_split);
                if (!s) throw UsageError("--split must be TRN, DEV or TST");
                ds = ds.subset(*s);
            }
            std::optional<ParseBank> parses;
            if (!P(score, "parses").empty()) parses = load_parses(P(score, "parses"));
            Run run = score_dataset(ranker, ds, parses ? &*parses : nullptr);
            json meta = echo("score", {{"model", P(score, "model")}, {"data", P(score, "data")}, {"split", score_split}});
            meta["model_config"] = ranker.run_config;
            meta["threshold"] = threshold_to_json(ranker.threshold);
            auto out = open_out(P(score, "out"));
            write_run(out, run, meta);
            spdlog::info("scored {} questions", run.size());
        } else if (eval->parsed()) {
            const Task task = task_of(cfg);
            std::shared_ptr<const SectionStore> store;
            Dataset gold;
            if (!P(eval, "sections").empty()) {
                store = open_sections(P(eval, "sections"));
                gold = load_dataset(P(eval, "gold"), store, task);
            } else {
                gold = read_questions(P(eval, "gold"), task);
            }
            auto facets = parse_facets(facets_arg);
            if (!store && std::find(facets.begin(), facets.end(), Facet::SLength) != facets.end())
                throw UsageError("the s_length facet needs --sections");
            Run run = attach_gold(read_run(P(eval, "run")), gold);

            double threshold = 0.0;
            std::string source = "none";
            if (task == Task::AT) {
                if (!P(eval, "sweep").empty()) {
                    auto sweep = threshold_sweep(attach_gold(read_run(P(eval, "sweep")), gold));
                    threshold = sweep.threshold;
                    source = "sweep";
                } else if (cfg.has("threshold")) {
                    threshold = cfg.get_double("threshold", 0.0);
                    source = "flag";
                } else {
                    std::ifstream in(P(eval, "run"));
                    std::string first;
                    std::getline(in, first);
                    auto j = json::parse(first, nullptr, false);
                    if (j.is_discarded() || !j.contains("_meta") || !j["_meta"].contains("threshold"))
                        throw UsageError("answer triggering needs --threshold or --sweep");
                    threshold = threshold_from_json(j["_meta"]["threshold"]);
                    source = "model";
                }
            }
            json report = evaluate(run, gold, threshold, facets);
            if (task == Task::AT) report["threshold_source"] = source;
            report["config"] = echo("eval", {{"run", P(eval, "run")},
                                             {"gold", P(eval, "gold")},
                                             {"sweep", P(eval, "sweep")},
                                             {"facets", facets_arg}});
            emit_json(report, P(eval, "out"));
        } else if (gradcheck->parsed()) {
            const std::uint64_t seed = cfg.get_u64("seed", 1);
            json reports = json::array();
            bool ok = true;
            for (std::size_t i = 0; i < gc_fixtures; ++i) {
                std::vector<LossFixture> fixtures;
                if (gc_model == "cnn" || gc_model == "all") fixtures.push_back(cnn_loss_fixture(seed + i));
                if (gc_model == "oneway" || gc_model == "all")
                    fixtures.push_back(attention_loss_fixture(AttentionVariant::OneWay, seed + i));
                if (gc_model == "ap" || gc_model == "all")
                    fixtures.push_back(attention_loss_fixture(AttentionVariant::AttentivePooling, seed + i));
                for (auto& f : fixtures) {
                    auto r = grad_check(f.loss, f.params, gc_opts);
                    ok = ok && r.passed;
                    reports.push_back({{"model", f.name},
                                       {"seed", seed + i},
                                       {"passed", r.passed},
                                       {"max_rel_error", r.max_rel_error},
                                       {"worst", r.worst},
                                       {"checked", r.checked},
                                       {"failure", r.failure}});
                }
            }
            json out{{"config", echo("gradcheck", {{"h", gc_opts.h}, {"tol", gc_opts.tol}})},
                     {"passed", ok},
                     {"reports", reports}};
            std::cout << out.dump(2) << '\n';
            if (!ok) {
                spdlog::error("gradient check failed");
                return 3;
            }
        } else if (demo->parsed()) {
            const std::uint64_t seed = cfg.get_u64("seed", 7);
            SynthOptions so;
            so.questions = 60;
            so.seed = seed;
            fs::create_directories(demo_dir);
            write_synthetic(make_synthetic(so), demo_dir);
            auto in = [&](const char* name) { return (fs::path(demo_dir) / name).string(); };
            spdlog::info("synthetic corpus written to {}", demo_dir);

            auto store = open_sections(in("sections.jsonl"));
            auto ds = load_dataset(in("questions.jsonl"), store, Task::ASS);
            auto parses = load_parses(in("parses.txt"));
            auto table = load_embeddings(in("embeddings.txt"));
            json summary{{"config", echo("demo", {{"workdir", demo_dir}})}};

            auto index = build_index(*store);
            save_index(in("index.bin"), index, summary["config"]);
            summary["suspicious"] = flag_suspicious(ds, index, 5).size();
            auto at = generate_triggering(ds, index, 5);
            at.sections = store;
            {
                auto out = open_out(in("at.jsonl"));
                write_questions(out, at, summary["config"]);
            }
            summary["at_answerable_fraction"] = answerable_fraction(at);
            summary["stats"] = corpus_report(ds).to_json();

            Config mc = cfg;
            mc.set("emb_dim", std::to_string(table.dim()));
            mc.set("filters_per_height", "16");
            mc.set("hidden_dim", "16");
            mc.set("hidden", "12");
            mc.set("epochs", "20");
            mc.set("batch_size", "4");
            mc.set("learning_rate", "0.02");
            mc.set("seed", std::to_string(seed));
            for (auto kind : {ModelKind::CnnSubtree, ModelKind::AttentivePooling}) {
                TrainSummary ts;
                auto ranker = train_ranker(kind, ds, table, &parses, cnn_config(mc), gru_config(mc),
                                           train_config(mc, kind), subtree_config(mc), &ts);
                ranker.run_config = mc.to_json();
                const auto model_path = in((std::string(to_string(kind)) + ".bin").c_str());
                save_checkpoint(model_path, ranker.to_checkpoint());
                auto loaded = Ranker::from_checkpoint(load_checkpoint(model_path));

                Run tst = score_dataset(loaded, ds.subset(Split::TST), &parses);
                {
                    auto out = open_out(in((std::string(to_string(kind)) + ".run.jsonl").c_str()));
                    write_run(out, tst, mc.to_json());
                }
                json m = evaluate(tst, ds, 0.0, {Facet::Topic, Facet::QType});
                m["train"] = train_summary_json(ts);
                Run at_tst = score_dataset(loaded, at.subset(Split::TST), &parses);
                m["triggering"] = evaluate(at_tst, at, loaded.threshold, {});
                summary["models"][std::string(to_string(kind))] = m;
            }
            emit_json(summary, in("summary.json"));
            std::cout << summary["models"].dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e);
    }
    return 0;
}
