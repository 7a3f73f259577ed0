#include "framing/svm.hpp"

#include "framing/errors.hpp"
#include "framing/metrics.hpp"
#include "framing/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace framing::models {

namespace {

double dot(const std::vector<double>& w, std::span<const std::size_t> idx, std::span<const double> val) {
    double s = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) s += w[idx[i]] * val[i];
    return s;
}

// Dual coordinate descent for the L2-loss SVM (bias as an unit feature).
void solve_binary(const features::FeatureMatrix& x, const std::vector<double>& y, double c, const SvmOptions& options,
                  Rng& rng, std::vector<double>& w, double& b) {
    const std::size_t n = x.rows();
    const double diag = 0.5 / c;
    std::vector<double> alpha(n, 0.0), qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sq = 1.0;  // bias feature
        for (double v : x.row_values(i)) sq += v * v;
        qd[i] = sq + diag;
    }
    w.assign(x.cols(), 0.0);
    b = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t pass = 0; pass < options.max_passes; ++pass) {
        rng.shuffle(std::span<std::size_t>(order));
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            auto idx = x.row_indices(i);
            auto val = x.row_values(i);
            const double g = y[i] * (dot(w, idx, val) + b) - 1.0 + diag * alpha[i];
            const double pg = alpha[i] == 0.0 ? std::min(g, 0.0) : g;
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) <= 1e-12) continue;
            const double old = alpha[i];
            alpha[i] = std::max(old - g / qd[i], 0.0);
            const double d = (alpha[i] - old) * y[i];
            for (std::size_t k = 0; k < idx.size(); ++k) w[idx[k]] += d * val[k];
            b += d;
        }
        if (pg_max - pg_min <= options.tolerance) break;
    }
}

}  // namespace

LinearSvmModel fit_linear_svm(const features::FeatureMatrix& x, std::span<const int> y, std::size_t n_classes,
                              double c, const SvmOptions& options) {
    if (x.rows() != y.size()) throw ShapeError("feature rows and labels differ in length");
    if (!(c > 0.0)) throw ConfigError("C must be positive");
    std::set<int> present;
    for (int v : y) {
        if (v < 0 || static_cast<std::size_t>(v) >= n_classes) throw ShapeError("label out of range");
        present.insert(v);
    }
    if (present.size() < 2) throw DegenerateDataError("linear SVM needs at least two classes in the training data");

    LinearSvmModel model;
    model.n_features = x.cols();
    model.n_classes = n_classes;
    model.c = c;
    std::vector<int> positives(present.begin(), present.end());
    if (positives.size() == 2) positives.erase(positives.begin());
    Rng rng(options.seed);
    for (int cls : positives) {
        std::vector<double> target(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) target[i] = y[i] == cls ? 1.0 : -1.0;
        std::vector<double> w;
        double b = 0.0;
        solve_binary(x, target, c, options, rng, w, b);
        model.machine_class.push_back(cls);
        model.weights.push_back(std::move(w));
        model.bias.push_back(b);
    }
    if (present.size() == 2) model.machine_class.insert(model.machine_class.begin(), *present.begin());
    return model;
}

std::vector<double> decision_values(const LinearSvmModel& model, const features::FeatureMatrix& x, std::size_t row) {
    std::vector<double> out;
    for (std::size_t m = 0; m < model.weights.size(); ++m)
        out.push_back(dot(model.weights[m], x.row_indices(row), x.row_values(row)) + model.bias[m]);
    return out;
}

std::vector<int> predict(const LinearSvmModel& model, const features::FeatureMatrix& x) {
    if (x.cols() != model.n_features) throw ShapeError("feature width does not match the SVM");
    std::vector<int> out;
    out.reserve(x.rows());
    const bool binary = model.machine_class.size() == 2 && model.weights.size() == 1;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto dv = decision_values(model, x, r);
        if (binary) {
            out.push_back(dv[0] > 0.0 ? model.machine_class[1] : model.machine_class[0]);
            continue;
        }
        std::size_t best = 0;
        for (std::size_t m = 1; m < dv.size(); ++m)
            if (dv[m] > dv[best]) best = m;
        out.push_back(model.machine_class[best]);
    }
    return out;
}

SvmSelection train_linear_svm(const features::FeatureMatrix& x, std::span<const int> y, std::size_t n_classes,
                              std::span<const double> c_grid, const features::FeatureMatrix& dev_x,
                              std::span<const int> dev_y, const SvmOptions& options) {
    if (c_grid.empty()) throw ConfigError("C grid must not be empty");
    std::vector<double> grid(c_grid.begin(), c_grid.end());
    std::sort(grid.begin(), grid.end());
    SvmSelection out;
    double best = -1.0;
    for (double c : grid) {
        auto model = fit_linear_svm(x, y, n_classes, c, options);
        const double score = dev_x.rows() > 0 ? eval::macro_f1_present(dev_y, predict(model, dev_x)) : 0.0;
        out.scores.push_back({c, score});
        if (score > best) {
            best = score;
            out.model = std::move(model);
        }
    }
    return out;
}

}  // namespace framing::models
