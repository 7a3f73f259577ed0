#include "framing/experiment.hpp"

#include "framing/baselines.hpp"
#include "framing/errors.hpp"
#include "framing/random.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>
#include <thread>

namespace framing::eval {

using nlohmann::json;

ModelSpec model_spec(std::string_view name, const models::TrainConfig& train, const std::vector<double>& c_grid) {
    ModelSpec spec;
    spec.name = std::string(name);
    spec.train = train;
    spec.c_grid = c_grid;
    if (name == "uniform") {
        spec.kind = ModelKind::Uniform;
    } else if (name == "stratified") {
        spec.kind = ModelKind::Stratified;
    } else if (name == "svm") {
        spec.kind = ModelKind::Svm;
        spec.svm.seed = train.seed;
    } else {
        spec.kind = ModelKind::Neural;
        spec.regime = models::regime_from_string(name);
        spec.name = std::string(models::to_string(spec.regime));
    }
    return spec;
}

json to_json(const ModelSpec& spec) {
    json j{{"name", spec.name}};
    switch (spec.kind) {
        case ModelKind::Uniform:
        case ModelKind::Stratified: break;
        case ModelKind::Svm:
            j["c_grid"] = spec.c_grid;
            j["tolerance"] = spec.svm.tolerance;
            j["max_passes"] = spec.svm.max_passes;
            break;
        case ModelKind::Neural:
            j["regime"] = models::to_string(spec.regime);
            j["learning_rate"] = spec.train.learning_rate;
            j["epochs"] = spec.train.epochs;
            j["batch_size"] = spec.train.batch_size;
            j["alpha"] = spec.train.alpha;
            j["schedule"] = models::to_string(spec.train.schedule);
            j["encoder"] = spec.train.encoder == models::EncoderKind::Projection ? "projection" : "identity";
            j["hidden"] = spec.train.hidden;
            break;
    }
    j["seed"] = spec.train.seed;
    return j;
}

ExperimentData experiment_data(const std::vector<corpus::AnnotatedHeadline>& records) {
    ExperimentData d;
    std::vector<corpus::LabelSet> labels;
    for (const auto& r : records) {
        d.ids.push_back(r.headline.id);
        d.texts.push_back(r.headline.text);
        labels.push_back(r.gold);
    }
    d.labels = models::task_labels(labels);
    d.tasks = models::default_tasks();
    d.class_names.resize(2);
    for (std::size_t c = 0; c < corpus::kPerceptionClasses; ++c)
        d.class_names[0].emplace_back(corpus::display_name(static_cast<corpus::Perception>(c)));
    for (std::size_t c = 0; c < corpus::kAccidentClasses; ++c)
        d.class_names[1].emplace_back(corpus::display_name(static_cast<corpus::Accident>(c)));
    return d;
}

namespace {

std::vector<std::string> pick(const std::vector<std::string>& v, const std::vector<std::size_t>& rows) {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

models::TaskLabels pick(const models::TaskLabels& labels, const std::vector<std::size_t>& rows) {
    models::TaskLabels out(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t)
        for (auto r : rows) out[t].push_back(labels[t][r]);
    return out;
}

std::vector<std::size_t> rows_for(const std::map<std::string, std::size_t>& index, const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = index.find(id);
        if (it == index.end()) throw ValidationError("split_plan", "split plan references unknown id " + id);
        out.push_back(it->second);
    }
    return out;
}

FoldResult score_fold(const ExperimentData& data, const models::TaskLabels& gold, const models::TaskLabels& predicted) {
    FoldResult r;
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
        std::vector<LabelScores> per_class;
        std::vector<int> labels;
        for (std::size_t c = 0; c < data.tasks[t].n_classes; ++c) {
            per_class.push_back(label_prf(gold[t], predicted[t], static_cast<int>(c)));
            labels.push_back(static_cast<int>(c));
        }
        r.macro_f1.push_back(micro_macro_f1(gold[t], predicted[t], labels).macro);
        r.confusion.push_back(confusion(gold[t], predicted[t], data.tasks[t].n_classes));
        r.scores.push_back(std::move(per_class));
    }
    return r;
}

}  // namespace

FoldFeatures fold_features(const ExperimentData& data, const std::vector<std::size_t>& train_rows,
                           const std::vector<std::size_t>& dev_rows, const std::vector<std::size_t>& test_rows,
                           const FeatureOptions& options) {
    FoldFeatures f;
    if (options.embeddings) {
        f.train = options.embeddings->rows(pick(data.ids, train_rows));
        f.dev = options.embeddings->rows(pick(data.ids, dev_rows));
        f.test = options.embeddings->rows(pick(data.ids, test_rows));
        f.vocab_hash = options.embeddings->hash();
        return f;
    }
    features::FitOptions fit;
    fit.min_df = options.min_df;
    f.vocab = features::fit_vocabulary(pick(data.texts, train_rows), fit);
    f.train = features::transform(*f.vocab, pick(data.texts, train_rows));
    f.dev = features::transform(*f.vocab, pick(data.texts, dev_rows));
    f.test = features::transform(*f.vocab, pick(data.texts, test_rows));
    f.vocab_hash = f.vocab->hash();
    return f;
}

models::TrainedModel train_model(const ModelSpec& spec, const ExperimentData& data, const features::FeatureMatrix& train_x,
                                 const std::vector<std::size_t>& train_rows, const features::FeatureMatrix& dev_x,
                                 const std::vector<std::size_t>& dev_rows, std::uint64_t seed, json* selection) {
    const auto train_y = pick(data.labels, train_rows);
    const auto dev_y = pick(data.labels, dev_rows);
    if (spec.kind == ModelKind::Svm) {
        models::SvmBundle bundle;
        bundle.tasks = data.tasks;
        json sel = json::array();
        models::SvmOptions options = spec.svm;
        options.seed = seed;
        for (std::size_t t = 0; t < data.tasks.size(); ++t) {
            auto chosen = models::train_linear_svm(train_x, train_y[t], data.tasks[t].n_classes, spec.c_grid, dev_x,
                                                   dev_y[t], options);
            json scores = json::array();
            for (const auto& s : chosen.scores) scores.push_back({{"c", s.c}, {"dev_macro_f1", s.dev_macro_f1}});
            sel.push_back({{"task", data.tasks[t].name}, {"chosen_c", chosen.model.c}, {"scores", scores}});
            bundle.per_task.push_back(std::move(chosen.model));
        }
        if (selection) *selection = std::move(sel);
        return bundle;
    }
    if (spec.kind != ModelKind::Neural) throw ConfigError("model '" + spec.name + "' has no trainable parameters");
    models::TrainConfig config = spec.train;
    config.seed = seed;
    models::Dataset train{&train_x, train_y};
    std::optional<models::Dataset> dev;
    if (dev_x.rows() > 0) dev = models::Dataset{&dev_x, dev_y};
    auto model = models::train_multitask(train, dev, data.tasks, config, spec.regime);
    if (selection) {
        json sel = json::array();
        for (std::size_t n = 0; n < model.networks.size(); ++n) {
            json tasks = json::array();
            for (auto t : model.networks[n].shape().tasks) tasks.push_back(data.tasks[t].name);
            sel.push_back({{"network", n}, {"tasks", tasks}, {"best_epoch", model.histories[n].best_epoch}});
        }
        *selection = std::move(sel);
    }
    return model;
}

double CvReport::overall_macro_f1() const {
    if (mean_macro_f1.empty()) return 0.0;
    double s = 0.0;
    for (double v : mean_macro_f1) s += v;
    return s / static_cast<double>(mean_macro_f1.size());
}

CvReport run_cv_experiment(const ExperimentData& data, const ModelSpec& spec, const corpus::SplitPlan& plan,
                           const FeatureOptions& feature_options, std::size_t threads) {
    if (plan.folds.empty()) throw SizingError("split plan has no folds");
    if (data.labels.size() != data.tasks.size()) throw ShapeError("one label column per task required");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.ids.size(); ++i) index.emplace(data.ids[i], i);

    CvReport report;
    report.spec = spec;
    report.seed = spec.train.seed;
    report.tasks = data.tasks;
    report.class_names = data.class_names;
    report.folds.resize(plan.folds.size());

    auto run_fold = [&](std::size_t f) {
        const auto& fold = plan.folds[f];
        const auto train_rows = rows_for(index, fold.train);
        const auto dev_rows = rows_for(index, fold.dev);
        const auto test_rows = rows_for(index, fold.test);
        const auto test_gold = pick(data.labels, test_rows);
        const std::uint64_t fold_seed = mix_seed(spec.train.seed, f);

        models::TaskLabels predicted(data.tasks.size());
        json selection = nullptr;
        if (spec.kind == ModelKind::Uniform) {
            for (std::size_t t = 0; t < data.tasks.size(); ++t)
                predicted[t] = models::predict_uniform(data.tasks[t].n_classes, test_rows.size(), mix_seed(fold_seed, t));
        } else if (spec.kind == ModelKind::Stratified) {
            const auto train_y = pick(data.labels, train_rows);
            for (std::size_t t = 0; t < data.tasks.size(); ++t)
                predicted[t] = models::predict_stratified(train_y[t], test_rows.size(), mix_seed(fold_seed, t));
        } else {
            FeatureOptions opts = feature_options;
            auto feats = fold_features(data, train_rows, dev_rows, test_rows, opts);
            ModelSpec fold_spec = spec;
            if (opts.embeddings) fold_spec.train.encoder = models::EncoderKind::Identity;
            auto model = train_model(fold_spec, data, feats.train, train_rows, feats.dev, dev_rows, fold_seed, &selection);
            predicted = models::predict(model, feats.test);
        }
        FoldResult result = score_fold(data, test_gold, predicted);
        result.fold = f;
        result.selection = std::move(selection);
        report.folds[f] = std::move(result);
    };

    if (threads <= 1) {
        for (std::size_t f = 0; f < plan.folds.size(); ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(plan.folds.size());
        auto worker = [&] {
            for (std::size_t f = next++; f < plan.folds.size(); f = next++) {
                try {
                    run_fold(f);
                } catch (...) {
                    errors[f] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, plan.folds.size()); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    const double n_folds = static_cast<double>(report.folds.size());
    report.mean_f1.resize(data.tasks.size());
    report.mean_macro_f1.assign(data.tasks.size(), 0.0);
    for (std::size_t t = 0; t < data.tasks.size(); ++t) {
        report.mean_f1[t].assign(data.tasks[t].n_classes, 0.0);
        for (const auto& fold : report.folds) {
            for (std::size_t c = 0; c < data.tasks[t].n_classes; ++c) report.mean_f1[t][c] += fold.scores[t][c].f1 / n_folds;
            report.mean_macro_f1[t] += fold.macro_f1[t] / n_folds;
        }
    }
    return report;
}

json to_json(const CvReport& report) {
    json folds = json::array();
    for (const auto& f : report.folds) {
        json tasks = json::array();
        for (std::size_t t = 0; t < report.tasks.size(); ++t) {
            json classes = json::array();
            for (std::size_t c = 0; c < f.scores[t].size(); ++c) {
                const auto& s = f.scores[t][c];
                classes.push_back({{"class", report.class_names[t][c]},
                                   {"tp", s.tp},
                                   {"fp", s.fp},
                                   {"fn", s.fn},
                                   {"precision", s.precision},
                                   {"recall", s.recall},
                                   {"f1", s.f1},
                                   {"degenerate", s.degenerate}});
            }
            const auto& cm = f.confusion[t];
            json matrix = json::array();
            for (std::size_t g = 0; g < cm.n_classes(); ++g) {
                json row = json::array();
                for (std::size_t p = 0; p < cm.n_classes(); ++p) row.push_back(cm.at(g, p));
                matrix.push_back(row);
            }
            tasks.push_back({{"task", report.tasks[t].name},
                             {"macro_f1", f.macro_f1[t]},
                             {"classes", classes},
                             {"confusion", matrix}});
        }
        folds.push_back({{"fold", f.fold}, {"tasks", tasks}, {"selection", f.selection}});
    }
    json table = json::object();
    json macro = json::object();
    for (std::size_t t = 0; t < report.tasks.size(); ++t) {
        json per_class = json::object();
        for (std::size_t c = 0; c < report.mean_f1[t].size(); ++c) per_class[report.class_names[t][c]] = report.mean_f1[t][c];
        table[report.tasks[t].name] = std::move(per_class);
        macro[report.tasks[t].name] = report.mean_macro_f1[t];
    }
    json columns = json::array();
    for (const auto& names : report.class_names)
        for (const auto& n : names) columns.push_back(n);
    return {{"model", to_json(report.spec)},
            {"seed", report.seed},
            {"columns", columns},
            {"mean_f1", table},
            {"mean_macro_f1", macro},
            {"folds", folds}};
}

std::string to_csv(const std::vector<CvReport>& reports) {
    std::ostringstream out;
    out << "model";
    if (!reports.empty())
        for (const auto& names : reports.front().class_names)
            for (const auto& n : names) out << ',' << n;
    out << '\n';
    char buf[32];
    for (const auto& r : reports) {
        out << r.spec.name;
        for (const auto& task : r.mean_f1)
            for (double v : task) {
                std::snprintf(buf, sizeof buf, "%.3f", v);
                out << ',' << buf;
            }
        out << '\n';
    }
    return out.str();
}

}  // namespace framing::eval
