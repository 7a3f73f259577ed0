#include "framing/commands.hpp"

#include "framing/analysis.hpp"
#include "framing/checkpoint.hpp"
#include "framing/errors.hpp"
#include "framing/experiment.hpp"
#include "framing/features.hpp"
#include "framing/ingest.hpp"
#include "framing/metrics.hpp"
#include "framing/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace framing::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig effective_config(const CommandOptions& options) {
    RunConfig config = options.config ? load_config(*options.config) : parse_config(json::object());
    if (options.seed) {
        config.seed = *options.seed;
        config.network.seed = *options.seed;
    }
    if (options.fixtures) config.scrape.fixtures = *options.fixtures;
    return config;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string rel(const Context& ctx, const fs::path& p) { return p.lexically_relative(ctx.out).generic_string(); }

fs::path write_manifest(const Context& ctx, const std::string& command, const std::vector<fs::path>& artifacts,
                        json summary) {
    json files = json::array();
    for (const auto& p : artifacts) files.push_back(rel(ctx, p));
    json j{{"command", command}, {"config", ctx.config.to_json()}, {"artifacts", files}, {"summary", std::move(summary)}};
    auto path = ctx.out / (command + "_run.json");
    write_text(path, j.dump(2) + "\n");
    return path;
}

fs::path require_labeled(const Context& ctx) {
    if (!ctx.config.paths.labeled_corpus) throw ConfigError("paths.labeled_corpus is required for this command");
    return *ctx.config.paths.labeled_corpus;
}

fs::path corpus_path(const Context& ctx) { return ctx.config.paths.corpus.value_or(ctx.out / "corpus.jsonl"); }
fs::path checkpoint_path(const Context& ctx) { return ctx.config.paths.checkpoint.value_or(ctx.out / "model.json"); }
fs::path vocab_path(const Context& ctx) { return ctx.config.paths.vocab.value_or(ctx.out / "vocab.json"); }

corpus::SplitPlan plan_for(const Context& ctx, const std::vector<std::string>& ids) {
    const auto& s = ctx.config.split;
    return corpus::make_split_plan(ids, s.folds, s.test_fraction, s.dev_fraction, ctx.config.seed);
}

std::string fixed(double v, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Feature space for prediction over arbitrary headlines: the saved vocabulary,
// or the embedding table when one is configured.
struct PredictionFeatures {
    std::string hash;
    std::optional<features::Vocabulary> vocab;
    std::optional<features::EmbeddingTable> embeddings;

    features::FeatureMatrix rows(const std::vector<std::string>& ids, const std::vector<std::string>& texts) const {
        if (embeddings) return embeddings->rows(ids);
        return features::transform(*vocab, texts);
    }
};

PredictionFeatures prediction_features(const Context& ctx) {
    PredictionFeatures f;
    if (ctx.config.paths.embeddings) {
        f.embeddings = features::EmbeddingTable::load(*ctx.config.paths.embeddings);
        f.hash = f.embeddings->hash();
    } else {
        f.vocab = features::Vocabulary::load(vocab_path(ctx));
        f.hash = f.vocab->hash();
    }
    return f;
}

}  // namespace

std::vector<fs::path> cmd_scrape(const Context& ctx) {
    const auto& sc = ctx.config.scrape;
    std::vector<ingest::FeedRequest> requests;
    for (const auto& kw : sc.keywords) {
        ingest::subject_for_keyword(kw);
        ingest::FeedRequest r;
        r.keyword = kw;
        r.base_url = sc.base_url;
        r.max_items = sc.max_items;
        r.politeness_delay = std::chrono::milliseconds(sc.politeness_delay_ms);
        ingest::validate(r);
        requests.push_back(std::move(r));
    }
    std::unique_ptr<ingest::FeedSource> source;
    if (sc.fixtures) {
        source = std::make_unique<ingest::FixtureFeedSource>(*sc.fixtures);
    } else {
        ingest::RetryPolicy retry;
        retry.max_retries = sc.max_retries;
        retry.initial_backoff = std::chrono::milliseconds(sc.initial_backoff_ms);
        source = std::make_unique<ingest::HttpFeedSource>(retry);
    }
    auto outcomes = ingest::fetch_all(*source, requests, sc.max_in_flight);

    std::vector<std::string> failures;
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (!outcomes[i].body) failures.push_back(requests[i].keyword + ": " + outcomes[i].error);
    if (!failures.empty()) {
        std::string msg = "fetch failed for " + std::to_string(failures.size()) + " keyword(s)";
        for (const auto& f : failures) msg += "\n  " + f;
        throw FetchError(outcomes.front().status, msg);
    }

    std::vector<corpus::Headline> all;
    json per_keyword = json::object();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto parsed = ingest::parse_rss(*outcomes[i].body);
        if (parsed.items.size() > sc.max_items) parsed.items.resize(sc.max_items);
        auto converted = ingest::to_headlines(parsed.items, requests[i].keyword);
        for (const auto& w : parsed.warnings) ctx.log << "warning: " << requests[i].keyword << ": " << w << "\n";
        for (const auto& w : converted.warnings) ctx.log << "warning: " << requests[i].keyword << ": " << w << "\n";
        ctx.log << "keyword " << requests[i].keyword << ": " << parsed.items.size() << " items, "
                << converted.headlines.size() << " headlines\n";
        per_keyword[requests[i].keyword] = {{"items", parsed.items.size()},
                                            {"headlines", converted.headlines.size()}};
        all.insert(all.end(), converted.headlines.begin(), converted.headlines.end());
    }
    auto unique = ingest::dedup(all);
    ctx.log << "scraped " << all.size() << " headlines, " << unique.size() << " after dedup\n";
    const auto path = ctx.out / "corpus.jsonl";
    fs::create_directories(ctx.out);
    corpus::save_headlines(unique, path);
    std::vector<fs::path> artifacts{path};
    artifacts.push_back(write_manifest(ctx, "scrape", artifacts,
                                       {{"per_keyword", per_keyword},
                                        {"fetched", all.size()},
                                        {"after_dedup", unique.size()}}));
    return artifacts;
}

std::vector<fs::path> cmd_prepare(const Context& ctx) {
    std::vector<fs::path> artifacts;
    json summary = json::object();
    if (ctx.config.sample.size > 0) {
        auto headlines = corpus::load_headlines(corpus_path(ctx));
        auto sample = ingest::accident_keyword_subsample(headlines, ctx.config.sample.size, ctx.config.seed,
                                                         ctx.config.sample.keywords, ctx.config.sample.match);
        for (const auto& w : sample.warnings) ctx.log << "warning: " << w << "\n";
        const auto path = ctx.out / "annotation_sample.jsonl";
        fs::create_directories(ctx.out);
        corpus::save_headlines(sample.headlines, path);
        artifacts.push_back(path);
        ctx.log << "sampled " << sample.headlines.size() << " of " << headlines.size() << " headlines\n";
        summary["sampled"] = sample.headlines.size();
        summary["sample_warnings"] = sample.warnings;
    }
    if (ctx.config.paths.labeled_corpus) {
        auto records = corpus::load_corpus(*ctx.config.paths.labeled_corpus);
        std::vector<std::string> ids;
        for (const auto& r : records) ids.push_back(r.headline.id);
        auto plan = plan_for(ctx, ids);
        const auto path = ctx.out / "split_plan.json";
        fs::create_directories(ctx.out);
        corpus::save_split_plan(plan, path);
        artifacts.push_back(path);
        ctx.log << "split plan: " << plan.folds.size() << " folds over " << ids.size() << " records\n";
        summary["split_records"] = ids.size();
        auto counts = corpus::schema_counts(records);
        json problems = json::array();
        for (const auto& p : corpus::check_counts(counts.total)) problems.push_back(p);
        summary["count_problems"] = problems;
    }
    if (artifacts.empty())
        throw ConfigError("prepare has nothing to do: set sample.size or paths.labeled_corpus");
    artifacts.push_back(write_manifest(ctx, "prepare", artifacts, summary));
    return artifacts;
}

std::vector<fs::path> cmd_train(const Context& ctx) {
    const auto& cfg = ctx.config;
    auto records = corpus::load_corpus(require_labeled(ctx));
    auto data = eval::experiment_data(records);

    corpus::SplitPlan plan;
    if (cfg.paths.split_plan) plan = corpus::load_split_plan(*cfg.paths.split_plan);
    else if (fs::exists(ctx.out / "split_plan.json")) plan = corpus::load_split_plan(ctx.out / "split_plan.json");
    else plan = plan_for(ctx, data.ids);

    std::optional<features::EmbeddingTable> table;
    eval::FeatureOptions feature_options;
    feature_options.min_df = cfg.min_df;
    if (cfg.paths.embeddings) {
        table = features::EmbeddingTable::load(*cfg.paths.embeddings);
        feature_options.embeddings = &*table;
    }

    auto make_spec = [&](const std::string& name) {
        auto spec = eval::model_spec(name, cfg.network, cfg.svm.c_grid);
        spec.svm.tolerance = cfg.svm.tolerance;
        spec.svm.max_passes = cfg.svm.max_passes;
        spec.svm.seed = cfg.seed;
        return spec;
    };

    std::vector<eval::CvReport> reports;
    json report_list = json::array();
    for (const auto& name : cfg.models) {
        auto report = eval::run_cv_experiment(data, make_spec(name), plan, feature_options, cfg.threads);
        ctx.log << "model " << report.spec.name << ":";
        for (std::size_t t = 0; t < report.tasks.size(); ++t)
            ctx.log << " " << report.tasks[t].name << " macro-F1 " << fixed(report.mean_macro_f1[t]);
        ctx.log << "\n";
        report_list.push_back(eval::to_json(report));
        reports.push_back(std::move(report));
    }
    std::vector<fs::path> artifacts;
    fs::create_directories(ctx.out);
    const auto report_json = ctx.out / "cv_report.json";
    write_text(report_json, json{{"config", cfg.to_json()}, {"reports", report_list}}.dump(2) + "\n");
    artifacts.push_back(report_json);
    const auto report_csv = ctx.out / "cv_report.csv";
    write_text(report_csv, eval::to_csv(reports));
    artifacts.push_back(report_csv);

    // Final model on all labeled data with a seeded dev holdout.
    auto final_spec = make_spec(cfg.final_model);
    if (final_spec.kind != eval::ModelKind::Svm && final_spec.kind != eval::ModelKind::Neural)
        throw ConfigError("final_model must be svm or a neural regime");
    std::vector<std::size_t> order(data.ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(cfg.seed, 0x5eed));
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t n_dev = cfg.split.dev_fraction > 0
                            ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                                           static_cast<double>(order.size()) * cfg.split.dev_fraction + 1e-9))
                            : 0;
    if (n_dev >= order.size()) throw SizingError("labeled corpus too small for a dev holdout");
    std::vector<std::size_t> dev_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_dev));
    std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_dev), order.end());
    std::sort(dev_rows.begin(), dev_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
    auto feats = eval::fold_features(data, train_rows, dev_rows, {}, feature_options);
    if (table) final_spec.train.encoder = models::EncoderKind::Identity;
    json selection = nullptr;
    auto model = eval::train_model(final_spec, data, feats.train, train_rows, feats.dev, dev_rows, cfg.seed, &selection);

    models::Checkpoint cp{std::move(model), feats.vocab_hash,
                          json{{"config", cfg.to_json()},
                               {"model", eval::to_json(final_spec)},
                               {"train_rows", train_rows.size()},
                               {"dev_rows", dev_rows.size()},
                               {"selection", selection}}};
    const auto model_path = ctx.out / "model.json";
    models::save_checkpoint(cp, model_path);
    artifacts.push_back(model_path);
    if (feats.vocab) {
        const auto vp = ctx.out / "vocab.json";
        feats.vocab->save(vp);
        artifacts.push_back(vp);
    }
    ctx.log << "final model " << final_spec.name << " trained on " << train_rows.size() << " records\n";
    json summary = json::object();
    for (const auto& r : reports) summary[r.spec.name] = r.overall_macro_f1();
    artifacts.push_back(write_manifest(ctx, "train", artifacts, {{"mean_macro_f1", summary}}));
    return artifacts;
}

std::vector<fs::path> cmd_evaluate(const Context& ctx) {
    const fs::path target = ctx.config.paths.eval_corpus.value_or(require_labeled(ctx));
    auto records = corpus::load_corpus(target);
    auto data = eval::experiment_data(records);
    auto pf = prediction_features(ctx);
    auto cp = models::load_checkpoint(checkpoint_path(ctx), pf.hash);
    auto predicted = models::predict(cp.model, pf.rows(data.ids, data.texts));

    json tasks = json::array();
    std::string csv = "task,class,precision,recall,f1,support\n";
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
        json classes = json::array();
        std::vector<int> labels;
        for (std::size_t c = 0; c < data.tasks[t].n_classes; ++c) {
            auto s = eval::label_prf(data.labels[t], predicted[t], static_cast<int>(c));
            labels.push_back(static_cast<int>(c));
            classes.push_back({{"class", data.class_names[t][c]},
                               {"precision", s.precision},
                               {"recall", s.recall},
                               {"f1", s.f1},
                               {"support", s.tp + s.fn}});
            csv += data.tasks[t].name + "," + data.class_names[t][c] + "," + fixed(s.precision) + "," +
                   fixed(s.recall) + "," + fixed(s.f1) + "," + std::to_string(s.tp + s.fn) + "\n";
        }
        auto mm = eval::micro_macro_f1(data.labels[t], predicted[t], labels);
        auto cm = eval::confusion(data.labels[t], predicted[t], data.tasks[t].n_classes);
        json matrix = json::array();
        for (std::size_t g = 0; g < cm.n_classes(); ++g) {
            json row = json::array();
            for (std::size_t p = 0; p < cm.n_classes(); ++p) row.push_back(cm.at(g, p));
            matrix.push_back(row);
        }
        tasks.push_back({{"task", data.tasks[t].name},
                         {"micro_f1", mm.micro},
                         {"macro_f1", mm.macro},
                         {"classes", classes},
                         {"confusion", matrix}});
        ctx.log << data.tasks[t].name << ": macro-F1 " << fixed(mm.macro) << ", micro-F1 " << fixed(mm.micro) << "\n";
    }

    auto agree = eval::agreement(records);
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    auto counts = corpus::schema_counts(records);
    auto counts_json = [](const corpus::SubjectCounts& c) {
        return json{{"records", c.records},
                    {"perception", c.perception},
                    {"accident", c.accident},
                    {"related_yes", c.related_yes()},
                    {"fault_total", c.fault_total()}};
    };
    json problems = json::array();
    for (const auto& p : corpus::check_counts(counts.total)) problems.push_back(p);

    json out{{"config", ctx.config.to_json()},
             {"corpus", target.generic_string()},
             {"in_sample", !ctx.config.paths.eval_corpus},
             {"tasks", tasks},
             {"agreement",
              {{"items", agree.items},
               {"fault_items", agree.fault_items},
               {"related_kappa", opt(agree.related)},
               {"fault_kappa", opt(agree.fault)},
               {"perception_kappa", opt(agree.perception)}}},
             {"counts",
              {{"cyclist", counts_json(counts.cyclist)},
               {"motorcyclist", counts_json(counts.motorcyclist)},
               {"total", counts_json(counts.total)},
               {"problems", problems}}}};
    std::vector<fs::path> artifacts;
    fs::create_directories(ctx.out);
    const auto ej = ctx.out / "evaluation.json";
    write_text(ej, out.dump(2) + "\n");
    artifacts.push_back(ej);
    const auto ec = ctx.out / "evaluation.csv";
    write_text(ec, csv);
    artifacts.push_back(ec);
    artifacts.push_back(write_manifest(ctx, "evaluate", artifacts, {{"records", records.size()}}));
    return artifacts;
}

std::vector<fs::path> cmd_analyze(const Context& ctx) {
    auto headlines = corpus::load_headlines(corpus_path(ctx));
    if (headlines.empty()) throw ValidationError("corpus", "corpus has no headlines to analyze");
    auto site_map = ctx.config.paths.site_map ? analysis::SiteCategoryMap::load(*ctx.config.paths.site_map)
                                              : analysis::SiteCategoryMap::builtin();
    auto pf = prediction_features(ctx);
    auto cp = models::load_checkpoint(checkpoint_path(ctx), pf.hash);
    std::vector<std::string> ids, texts;
    for (const auto& h : headlines) {
        ids.push_back(h.id);
        texts.push_back(h.text);
    }
    auto labels = models::label_sets(models::predict(cp.model, pf.rows(ids, texts)));
    std::vector<fs::path> artifacts;
    fs::create_directories(ctx.out);
    const auto pred_path = ctx.out / "predictions.jsonl";
    analysis::save_predictions(ids, labels, pred_path);
    artifacts.push_back(pred_path);

    auto predictions = analysis::load_predictions(pred_path);
    auto report = analysis::build_case_study_report(headlines, predictions, site_map, ctx.config.analysis);
    auto written = analysis::write_case_study(report, ctx.out, ctx.config.to_json());
    artifacts.insert(artifacts.end(), written.begin(), written.end());
    std::size_t significant = static_cast<std::size_t>(
        std::count_if(report.site_rows.begin(), report.site_rows.end(), [](const auto& r) { return r.significant; }));
    ctx.log << "analyzed " << headlines.size() << " headlines; " << report.category_domains.size()
            << " categorized domains; " << significant << " of " << report.site_rows.size()
            << " sites differ significantly\n";
    artifacts.push_back(write_manifest(ctx, "analyze", artifacts,
                                       {{"headlines", headlines.size()},
                                        {"category_domains", report.category_domains.size()},
                                        {"sites_tested", report.site_rows.size()},
                                        {"sites_significant", significant}}));
    return artifacts;
}

std::vector<fs::path> cmd_report(const Context& ctx) {
    std::ostringstream md;
    md << "# Headline framing report\n";
    bool any = false;
    if (fs::exists(ctx.out / "cv_report.json")) {
        any = true;
        auto j = read_json(ctx.out / "cv_report.json");
        md << "\n## Cross-validated F1 by class\n\n";
        const auto& reports = j.at("reports");
        if (!reports.empty()) {
            const auto& columns = reports.front().at("columns");
            md << "| Model |";
            for (const auto& c : columns) md << " " << c.get<std::string>() << " |";
            md << "\n|---|";
            for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
            md << "\n";
            for (const auto& r : reports) {
                md << "| " << r.at("model").at("name").get<std::string>() << " |";
                // Column order follows "columns"; mean_f1 is keyed by task then class.
                for (const auto& fold_task : r.at("folds").front().at("tasks")) {
                    const auto& per_class = r.at("mean_f1").at(fold_task.at("task").get<std::string>());
                    for (const auto& cls : fold_task.at("classes"))
                        md << " " << fixed(per_class.at(cls.at("class").get<std::string>()).get<double>()) << " |";
                }
                md << "\n";
            }
        }
    }
    if (fs::exists(ctx.out / "evaluation.json")) {
        any = true;
        auto j = read_json(ctx.out / "evaluation.json");
        md << "\n## Evaluation\n\n";
        for (const auto& t : j.at("tasks"))
            md << "- " << t.at("task").get<std::string>() << ": macro-F1 " << fixed(t.at("macro_f1").get<double>())
               << "\n";
        const auto& a = j.at("agreement");
        auto kappa = [](const json& v) { return v.is_null() ? std::string("n/a") : fixed(v.get<double>()); };
        md << "- agreement over " << a.at("items").get<std::size_t>() << " doubly annotated items: related kappa "
           << kappa(a.at("related_kappa")) << ", fault kappa " << kappa(a.at("fault_kappa")) << ", perception kappa "
           << kappa(a.at("perception_kappa")) << "\n";
    }
    if (fs::exists(ctx.out / "case_study" / "report.json")) {
        any = true;
        auto j = read_json(ctx.out / "case_study" / "report.json");
        auto prop = [](const json& v) { return v.is_null() ? std::string("empty") : fixed(v.get<double>()); };
        md << "\n## Accident proportion by site category\n\n| Category | Subject | n | Accident | At fault | Other "
              "at fault |\n|---|---|---|---|---|---|\n";
        for (const auto& r : j.at("category_rows"))
            md << "| " << r.at("group").get<std::string>() << " | " << r.at("subject").get<std::string>() << " | "
               << r.at("n").get<std::size_t>() << " | " << prop(r.at("accident_proportion")) << " | "
               << prop(r.at("at_fault_proportion")) << " | " << prop(r.at("not_at_fault_proportion")) << " |\n";
        md << "\n## Sites with significant cyclist vs motorcyclist differences\n\n| Site | Cyclist | Motorcyclist | "
              "p-value |\n|---|---|---|---|\n";
        for (const auto& s : j.at("site_rows")) {
            if (!s.at("significant").get<bool>()) continue;
            char p[32];
            std::snprintf(p, sizeof p, "%.3g", s.at("p_value").get<double>());
            md << "| " << s.at("domain").get<std::string>() << " | " << fixed(s.at("p_cyclist").get<double>(), 4)
               << " | " << fixed(s.at("p_motorcyclist").get<double>(), 4) << " | " << p << " |\n";
        }
        md << "\n## Pronoun gender\n\n| Gender | Subject | n | Not accident | Not at fault |\n|---|---|---|---|---|\n";
        for (const auto& r : j.at("gender_rows"))
            md << "| " << r.at("group").get<std::string>() << " | " << r.at("subject").get<std::string>() << " | "
               << r.at("n").get<std::size_t>() << " | " << prop(r.at("not_accident_proportion")) << " | "
               << prop(r.at("not_at_fault_proportion")) << " |\n";
        for (const auto& g : j.at("gender_summary"))
            md << "\nFemale to male headline ratio (" << g.at("subject").get<std::string>()
               << "): " << prop(g.at("female_to_male_ratio")) << "\n";
    }
    if (!any) throw ConfigError("report found no cv_report.json, evaluation.json or case_study/report.json in " +
                                ctx.out.string());
    const auto path = ctx.out / "report.md";
    write_text(path, md.str());
    std::vector<fs::path> artifacts{path};
    artifacts.push_back(write_manifest(ctx, "report", artifacts, json::object()));
    return artifacts;
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& log, std::ostream& err) {
    try {
        Context ctx{effective_config(options), options.out, log};
        if (name == "scrape") cmd_scrape(ctx);
        else if (name == "prepare") cmd_prepare(ctx);
        else if (name == "train") cmd_train(ctx);
        else if (name == "evaluate") cmd_evaluate(ctx);
        else if (name == "analyze") cmd_analyze(ctx);
        else if (name == "report") cmd_report(ctx);
        else {
            err << "error: unknown subcommand '" << name << "'\n";
            return 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error (" << e.field() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace framing::cli
