#include "support.hpp"

#include "framing/baselines.hpp"
#include "framing/checkpoint.hpp"
#include "framing/errors.hpp"
#include "framing/experiment.hpp"
#include "framing/metrics.hpp"
#include "framing/random.hpp"
#include "framing/svm.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

using namespace framing;

namespace {

features::FeatureMatrix blobs(std::size_t n, std::size_t n_classes, std::uint64_t seed, std::vector<int>& y,
                              double spread = 0.3) {
    Rng rng(seed);
    const std::size_t d = 6;
    features::FeatureMatrix x(d);
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % n_classes);
        std::vector<double> row(d);
        for (std::size_t j = 0; j < d; ++j) row[j] = rng.uniform(-spread, spread);
        row[static_cast<std::size_t>(c)] += 2.0;
        x.add_dense_row(row);
        y.push_back(c);
    }
    return x;
}

// Gradient of 1/2 (|w|^2 + b^2) + C sum max(0, 1 - y (w.x + b))^2.
std::vector<double> primal_gradient(const features::FeatureMatrix& x, const std::vector<double>& target,
                                    const std::vector<double>& w, double b, double c) {
    std::vector<double> g(w);
    g.push_back(b);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.dense_row(i);
        double f = b;
        for (std::size_t j = 0; j < row.size(); ++j) f += w[j] * row[j];
        const double slack = 1.0 - target[i] * f;
        if (slack <= 0) continue;
        for (std::size_t j = 0; j < row.size(); ++j) g[j] -= 2 * c * slack * target[i] * row[j];
        g.back() -= 2 * c * slack * target[i];
    }
    return g;
}

struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

Counts brute_counts(const std::vector<int>& gold, const std::vector<int>& pred, int label) {
    Counts c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == label && pred[i] == label) ++c.tp;
        if (gold[i] != label && pred[i] == label) ++c.fp;
        if (gold[i] == label && pred[i] != label) ++c.fn;
    }
    return c;
}

double safe_div(double a, double b) { return b == 0 ? 0.0 : a / b; }

double brute_f1(const Counts& c) {
    const double p = safe_div(c.tp, c.tp + c.fp), r = safe_div(c.tp, c.tp + c.fn);
    return safe_div(2 * p * r, p + r);
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("dual solution satisfies the primal optimality condition") {
    for (std::size_t k : {2u, 3u, 4u}) {
        std::vector<int> y;
        auto x = blobs(60, k, k, y, 1.5);
        models::SvmOptions opts;
        opts.tolerance = 1e-9;
        opts.max_passes = 100000;
        for (double c : {0.01, 1.0, 10.0}) {
            auto m = models::fit_linear_svm(x, y, k, c, opts);
            CHECK(m.weights.size() == (k == 2 ? 1u : k));
            for (std::size_t machine = 0; machine < m.weights.size(); ++machine) {
                const int positive = k == 2 ? m.machine_class[1] : m.machine_class[machine];
                std::vector<double> target;
                for (int v : y) target.push_back(v == positive ? 1.0 : -1.0);
                auto g = primal_gradient(x, target, m.weights[machine], m.bias[machine], c);
                double worst = 0;
                for (double v : g) worst = std::max(worst, std::fabs(v));
                CHECK(worst < 1e-5 * std::max(1.0, c));
            }
        }
    }
}

TEST_CASE("separable blobs are classified and seeds do not matter much") {
    std::vector<int> y;
    auto x = blobs(90, 3, 1, y);
    auto m = models::fit_linear_svm(x, y, 3, 1.0);
    CHECK(models::predict(m, x) == y);
    models::SvmOptions other;
    other.seed = 99;
    auto m2 = models::fit_linear_svm(x, y, 3, 1.0, other);
    CHECK(models::predict(m2, x) == y);
    CHECK(models::fit_linear_svm(x, y, 3, 1.0).weights == m.weights);
}

TEST_CASE("grid selection prefers the best dev score and the smaller C on ties") {
    std::vector<int> y, dy;
    auto x = blobs(60, 2, 2, y);
    auto dx = blobs(30, 2, 3, dy);
    auto sel = models::train_linear_svm(x, y, 2, models::kDefaultCGrid, dx, dy);
    REQUIRE(sel.scores.size() == models::kDefaultCGrid.size());
    double best = 0;
    for (const auto& s : sel.scores) best = std::max(best, s.dev_macro_f1);
    double chosen = 0;
    for (const auto& s : sel.scores)
        if (s.dev_macro_f1 == best) {
            chosen = s.c;
            break;
        }
    CHECK(sel.model.c == chosen);
}

TEST_CASE("svm input errors") {
    std::vector<int> y;
    auto x = blobs(10, 2, 4, y);
    std::vector<int> one(10, 1);
    CHECK_THROWS_AS(models::fit_linear_svm(x, one, 2, 1.0), DegenerateDataError);
    CHECK_THROWS_AS(models::fit_linear_svm(x, y, 2, 0.0), ConfigError);
    std::vector<int> shorter(y.begin(), y.begin() + 5);
    CHECK_THROWS_AS(models::fit_linear_svm(x, shorter, 2, 1.0), ShapeError);
    std::vector<double> empty;
    CHECK_THROWS_AS(models::train_linear_svm(x, y, 2, empty, x, y), ConfigError);
}

}

TEST_SUITE("baselines") {

TEST_CASE("uniform draws cover classes evenly") {
    auto p = models::predict_uniform(4, 30000, 1);
    std::map<int, std::size_t> counts;
    for (int v : p) ++counts[v];
    CHECK(counts.size() == 4);
    for (const auto& [cls, n] : counts) CHECK(std::fabs(n / 30000.0 - 0.25) <= 0.01);
    CHECK(p == models::predict_uniform(4, 30000, 1));
    CHECK(p != models::predict_uniform(4, 30000, 2));
    CHECK_THROWS_AS(models::predict_uniform(1, 5, 1), ConfigError);
}

TEST_CASE("stratified draws follow training proportions") {
    std::vector<int> train;
    for (int i = 0; i < 70; ++i) train.push_back(0);
    for (int i = 0; i < 20; ++i) train.push_back(2);
    for (int i = 0; i < 10; ++i) train.push_back(3);
    auto p = models::predict_stratified(train, 30000, 3);
    std::map<int, std::size_t> counts;
    for (int v : p) ++counts[v];
    CHECK(counts.count(1) == 0);
    CHECK(std::fabs(counts[0] / 30000.0 - 0.7) <= 0.02);
    CHECK(std::fabs(counts[2] / 30000.0 - 0.2) <= 0.02);
    CHECK(std::fabs(counts[3] / 30000.0 - 0.1) <= 0.02);
    std::vector<int> single{5};
    CHECK(models::predict_stratified(single, 10, 1) == std::vector<int>(10, 5));
    CHECK_THROWS_AS(models::predict_stratified(std::vector<int>{}, 3, 1), DegenerateDataError);
}

}

TEST_SUITE("metrics") {

TEST_CASE("label scores on a worked example") {
    std::vector<int> gold{0, 0, 1, 1, 2, 2};
    std::vector<int> pred{0, 1, 1, 1, 0, 2};
    auto s = eval::label_prf(gold, pred, 1);
    CHECK(s.tp == 2);
    CHECK(s.fp == 1);
    CHECK(s.fn == 0);
    CHECK(s.precision == doctest::Approx(2.0 / 3));
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == doctest::Approx(0.8));
    auto absent = eval::label_prf(gold, pred, 3);
    CHECK(absent.degenerate);
    CHECK(absent.f1 == 0.0);
    std::vector<int> shorter{0};
    CHECK_THROWS_AS(eval::label_prf(gold, shorter, 0), ShapeError);
}

TEST_CASE("metrics match brute-force counting") {
    Rng rng(20);
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 2 + rng.index(4);
        const std::size_t n = 1 + rng.index(80);
        std::vector<int> gold(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            gold[i] = static_cast<int>(rng.index(k));
            pred[i] = rng.uniform() < 0.5 ? gold[i] : static_cast<int>(rng.index(k));
        }
        std::vector<int> labels(k);
        std::iota(labels.begin(), labels.end(), 0);
        Counts total;
        double f_sum = 0;
        for (int l : labels) {
            auto c = brute_counts(gold, pred, l);
            auto s = eval::label_prf(gold, pred, l);
            CHECK(s.tp == c.tp);
            CHECK(s.fp == c.fp);
            CHECK(s.fn == c.fn);
            CHECK(s.f1 == brute_f1(c));
            total.tp += c.tp;
            total.fp += c.fp;
            total.fn += c.fn;
            f_sum += brute_f1(c);
        }
        auto mm = eval::micro_macro_f1(gold, pred, labels);
        CHECK(mm.macro == f_sum / k);
        CHECK(mm.micro == brute_f1(total));
        auto cm = eval::confusion(gold, pred, k);
        CHECK(cm.total() == n);
        for (std::size_t g = 0; g < k; ++g)
            for (std::size_t p = 0; p < k; ++p) {
                std::size_t count = 0;
                for (std::size_t i = 0; i < n; ++i) count += gold[i] == int(g) && pred[i] == int(p);
                CHECK(cm.at(g, p) == count);
            }
    }
}

TEST_CASE("present-label macro F1 ignores absent classes") {
    std::vector<int> gold{0, 0, 1};
    std::vector<int> pred{0, 0, 1};
    CHECK(eval::macro_f1_present(gold, pred) == 1.0);
    std::vector<int> all{0, 1, 2, 3};
    CHECK(eval::micro_macro_f1(gold, pred, all).macro == 0.5);
}

TEST_CASE("kappa examples") {
    // p_o = .7 with both annotators 50/50, so p_e = .5.
    std::vector<int> a, b;
    for (int i = 0; i < 20; ++i) a.push_back(i < 10);
    for (int i = 0; i < 20; ++i) b.push_back(i < 7 || (i >= 10 && i < 13));
    CHECK(eval::cohens_kappa(a, b, 2) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(eval::cohens_kappa(a, a, 2) == 1.0);
    std::vector<int> same(5, 1);
    CHECK(eval::cohens_kappa(same, same, 3) == 1.0);
    std::vector<int> empty;
    CHECK_THROWS_AS(eval::cohens_kappa(empty, empty, 2), ShapeError);
    std::vector<int> bad{5};
    CHECK_THROWS_AS(eval::confusion(bad, bad, 2), ShapeError);
}

TEST_CASE("agreement over annotated records") {
    using corpus::Accident;
    using corpus::Perception;
    std::vector<corpus::AnnotatedHeadline> records(4);
    std::vector<std::pair<corpus::LabelSet, corpus::LabelSet>> pairs{
        {{Perception::Negative, Accident::CyclistFault}, {Perception::Negative, Accident::CyclistFault}},
        {{Perception::Neutral, Accident::OtherFault}, {Perception::Neutral, Accident::UnknownFault}},
        {{Perception::Positive, Accident::NotAccident}, {Perception::Positive, Accident::NotAccident}},
        {{Perception::Neutral, Accident::NotAccident}, {Perception::Neutral, Accident::OtherFault}},
    };
    for (std::size_t i = 0; i < 4; ++i) {
        records[i].headline.id = std::to_string(i);
        records[i].annotator_labels = std::vector<corpus::LabelSet>{pairs[i].first, pairs[i].second};
    }
    corpus::AnnotatedHeadline lone;
    lone.headline.id = "x";
    records.push_back(lone);
    auto r = eval::agreement(records);
    CHECK(r.items == 4);
    CHECK(r.fault_items == 2);
    CHECK(r.perception == std::optional<double>(1.0));
    // related: a = 1,1,0,0  b = 1,1,0,1 -> p_o = .75, p_e = .5*.75 + .5*.25 = .5
    CHECK(*r.related == doctest::Approx(0.5));
    // fault over two items: a = cyc, other; b = cyc, unknown -> p_o = .5, p_e = .25
    CHECK(*r.fault == doctest::Approx(1.0 / 3));
    CHECK_FALSE(eval::agreement({lone}).related.has_value());
}

}

TEST_SUITE("checkpoint") {

namespace {

struct Trained {
    features::Vocabulary vocab;
    features::FeatureMatrix x;
    eval::ExperimentData data;
};

Trained small_problem() {
    testing::SyntheticOptions o;
    o.n = 80;
    o.seed = 3;
    auto records = testing::synthetic_corpus(o);
    Trained t;
    t.data = eval::experiment_data(records);
    t.vocab = features::fit_vocabulary(t.data.texts);
    t.x = features::transform(t.vocab, t.data.texts);
    return t;
}

}  // namespace

TEST_CASE("neural and svm checkpoints round trip") {
    auto t = small_problem();
    std::vector<std::size_t> rows(t.data.ids.size());
    std::iota(rows.begin(), rows.end(), 0);
    testing::TempDir dir("checkpoint");
    models::TrainConfig config;
    config.epochs = 3;
    config.hidden = 8;
    for (std::string name : {"mt", "mtlpt", "mt_mtlpt", "single", "svm"}) {
        auto spec = eval::model_spec(name, config);
        auto model = eval::train_model(spec, t.data, t.x, rows, t.x, rows, 1, nullptr);
        models::Checkpoint cp{model, t.vocab.hash(), nlohmann::json{{"model", name}}};
        auto path = dir / (name + ".json");
        models::save_checkpoint(cp, path);
        auto back = models::load_checkpoint(path, t.vocab.hash());
        CHECK(back.vocab_hash == t.vocab.hash());
        CHECK(back.metadata == cp.metadata);
        CHECK(models::predict(back.model, t.x) == models::predict(model, t.x));
        CHECK(models::to_json(back.model) == models::to_json(model));
        models::save_checkpoint(back, dir / "again.json");
        CHECK(testing::read_file(dir / "again.json") == testing::read_file(path));
    }
}

TEST_CASE("checkpoint refuses a different feature space") {
    auto t = small_problem();
    std::vector<std::size_t> rows(t.data.ids.size());
    std::iota(rows.begin(), rows.end(), 0);
    auto model = eval::train_model(eval::model_spec("svm"), t.data, t.x, rows, t.x, rows, 1, nullptr);
    testing::TempDir dir("checkpoint");
    models::save_checkpoint({model, t.vocab.hash(), nullptr}, dir / "m.json");
    auto other = features::fit_vocabulary({"entirely different words"});
    try {
        models::load_checkpoint(dir / "m.json", other.hash());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "vocab_hash");
    }
    CHECK_THROWS_AS(models::load_checkpoint(dir / "missing.json"), IoError);
    testing::write_file(dir / "junk.json", "{\"format\": \"something\"}");
    CHECK_THROWS_AS(models::load_checkpoint(dir / "junk.json"), ParseError);
    testing::write_file(dir / "broken.json", "{");
    CHECK_THROWS_AS(models::load_checkpoint(dir / "broken.json"), ParseError);
}

}

TEST_SUITE("experiment") {

namespace {

eval::ExperimentData synthetic_data(std::size_t n, std::uint64_t seed) {
    testing::SyntheticOptions o;
    o.n = n;
    o.seed = seed;
    return eval::experiment_data(testing::synthetic_corpus(o));
}

}  // namespace

TEST_CASE("model names") {
    CHECK(eval::model_spec("uniform").kind == eval::ModelKind::Uniform);
    CHECK(eval::model_spec("svm").kind == eval::ModelKind::Svm);
    CHECK(eval::model_spec("mt+mtlpt").name == "mt_mtlpt");
    CHECK_THROWS_AS(eval::model_spec("cnn"), ConfigError);
}

TEST_CASE("cv experiment is deterministic and thread independent") {
    auto data = synthetic_data(150, 5);
    auto plan = corpus::make_split_plan(data.ids, 3, 0.2, 0.1, 7);
    models::TrainConfig config;
    config.epochs = 4;
    config.hidden = 8;
    for (std::string name : {"stratified", "svm", "mt_mtlpt"}) {
        auto spec = eval::model_spec(name, config, {0.1, 1.0});
        auto a = eval::run_cv_experiment(data, spec, plan);
        auto b = eval::run_cv_experiment(data, spec, plan, {}, 3);
        CHECK(eval::to_json(a).dump() == eval::to_json(b).dump());
        CHECK(a.folds.size() == 3);
        CHECK(a.mean_f1.size() == 2);
        CHECK(a.mean_f1[1].size() == 4);
        for (const auto& fold : a.folds) CHECK(fold.confusion[0].total() == plan.folds[0].test.size());
    }
    auto csv = eval::to_csv({eval::run_cv_experiment(data, eval::model_spec("uniform"), plan)});
    CHECK(csv.find("uniform") != std::string::npos);
}

TEST_CASE("mean scores are fold averages") {
    auto data = synthetic_data(120, 6);
    auto plan = corpus::make_split_plan(data.ids, 4, 0.25, 0.1, 2);
    auto r = eval::run_cv_experiment(data, eval::model_spec("uniform"), plan);
    for (std::size_t t = 0; t < 2; ++t) {
        double macro = 0;
        for (const auto& f : r.folds) macro += f.macro_f1[t];
        CHECK(r.mean_macro_f1[t] == doctest::Approx(macro / 4).epsilon(1e-12));
        for (std::size_t c = 0; c < r.mean_f1[t].size(); ++c) {
            double s = 0;
            for (const auto& f : r.folds) s += f.scores[t][c].f1;
            CHECK(r.mean_f1[t][c] == doctest::Approx(s / 4).epsilon(1e-12));
        }
    }
    CHECK(r.overall_macro_f1() == doctest::Approx((r.mean_macro_f1[0] + r.mean_macro_f1[1]) / 2));
}

TEST_CASE("stratified baseline F1 approaches the class prior") {
    // With predictions independent of gold and drawn from the gold prior, the
    // expected precision and recall of class c are both its prior share.
    auto data = synthetic_data(3000, 7);
    auto plan = corpus::make_split_plan(data.ids, 2, 0.5, 0.1, 3);
    auto r = eval::run_cv_experiment(data, eval::model_spec("stratified"), plan);
    for (std::size_t t = 0; t < 2; ++t) {
        std::map<int, double> prior;
        for (int y : data.labels[t]) prior[y] += 1.0 / data.labels[t].size();
        for (const auto& [c, share] : prior) CHECK(std::fabs(r.mean_f1[t][static_cast<std::size_t>(c)] - share) < 0.03);
    }
}

TEST_CASE("fold features use only training rows for the vocabulary") {
    auto data = synthetic_data(30, 8);
    data.texts[29] = "zzzuniqueword";
    std::vector<std::size_t> train(20), dev{20, 21, 22}, test{23, 24, 25, 26, 27, 28, 29};
    std::iota(train.begin(), train.end(), 0);
    auto f = eval::fold_features(data, train, dev, test, {});
    REQUIRE(f.vocab.has_value());
    CHECK(f.vocab->index_of("zzzuniqueword") == -1);
    CHECK(f.vocab->n_docs() == 20);
    CHECK(f.test.rows() == 7);
    CHECK(f.test.row_indices(6).empty());
    CHECK(f.vocab_hash == f.vocab->hash());
}

TEST_CASE("split plans must reference known ids") {
    auto data = synthetic_data(30, 9);
    auto plan = corpus::make_split_plan(data.ids, 2, 0.2, 0.1, 1);
    plan.folds[0].test[0] = "ghost";
    CHECK_THROWS_AS(eval::run_cv_experiment(data, eval::model_spec("uniform"), plan), ValidationError);
}

}
