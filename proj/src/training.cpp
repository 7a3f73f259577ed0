#include "framing/training.hpp"

#include "framing/errors.hpp"
#include "framing/losses.hpp"
#include "framing/metrics.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace framing::models {

std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::MT: return "mt";
        case Regime::MTLPT: return "mtlpt";
        case Regime::MT_PLUS_MTLPT: return "mt_mtlpt";
        case Regime::Single: return "single";
    }
    return "?";
}

Regime regime_from_string(std::string_view s) {
    if (s == "mt") return Regime::MT;
    if (s == "mtlpt") return Regime::MTLPT;
    if (s == "mt_mtlpt" || s == "mt+mtlpt") return Regime::MT_PLUS_MTLPT;
    if (s == "single") return Regime::Single;
    throw ConfigError("unknown regime '" + std::string(s) + "'");
}

std::string_view to_string(Schedule s) { return s == Schedule::Fixed ? "fixed" : "cosine"; }

Schedule schedule_from_string(std::string_view s) {
    if (s == "fixed") return Schedule::Fixed;
    if (s == "cosine") return Schedule::Cosine;
    throw ConfigError("unknown schedule '" + std::string(s) + "'");
}

std::vector<TaskSpec> default_tasks() {
    return {{"perception", corpus::kPerceptionClasses, 1.0}, {"accident", corpus::kAccidentClasses, 1.0}};
}

double scheduled_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
    if (config.schedule == Schedule::Fixed || total_steps == 0) return config.learning_rate;
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n_items, std::size_t epochs, std::uint64_t seed,
                                                   std::uint64_t stream) {
    Rng rng(mix_seed(seed, 2 * stream + 1));
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t e = 0; e < epochs; ++e) {
        std::vector<std::size_t> order(n_items);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span<std::size_t>(order));
        out.push_back(std::move(order));
    }
    return out;
}

Network initial_network(const NetworkShape& shape, std::uint64_t seed, std::uint64_t stream) {
    Rng rng(mix_seed(seed, 2 * stream));
    return Network::initialized(shape, rng);
}

std::vector<int> argmax_rows(const Matrix& logits) {
    std::vector<int> out(logits.rows);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

namespace {

double dev_score(const Network& net, const features::FeatureMatrix& dev_x, const TaskLabels& dev_labels) {
    auto logits = net.predict_logits(dev_x);
    double total = 0.0;
    for (std::size_t h = 0; h < logits.size(); ++h) {
        const auto& gold = dev_labels.at(net.shape().tasks[h]);
        total += eval::macro_f1_present(gold, argmax_rows(logits[h]));
    }
    return total / static_cast<double>(logits.size());
}

BatchTargets slice_targets(const BatchTargets& all, std::span<const std::size_t> rows) {
    BatchTargets out;
    out.heads.resize(all.heads.size());
    for (std::size_t h = 0; h < all.heads.size(); ++h)
        for (auto r : rows) out.heads[h].push_back(all.heads[h][r]);
    if (!all.lp.empty())
        for (auto r : rows) out.lp.push_back(all.lp[r]);
    return out;
}

}  // namespace

TrainHistory train_network(Network& net, const features::FeatureMatrix& x, const BatchTargets& targets,
                           const LossWeights& weights, const TrainConfig& config, std::uint64_t stream,
                           const features::FeatureMatrix* dev_x, const TaskLabels* dev_labels) {
    const std::size_t n = x.rows();
    if (n == 0) throw DegenerateDataError("cannot train on an empty dataset");
    if (config.batch_size == 0 || config.epochs == 0) throw ConfigError("batch_size and epochs must be positive");
    for (const auto& h : targets.heads)
        if (h.size() != n) throw ShapeError("training labels do not cover every row");

    const std::size_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = batches_per_epoch * config.epochs;
    const auto orders = epoch_orders(n, config.epochs, config.seed, stream);

    Adam adam(net.param_count());
    TrainHistory history;
    std::vector<double> best_params(net.params().begin(), net.params().end());
    std::optional<double> best_score;
    std::vector<double> grad;
    std::vector<std::size_t> batch_rows;
    std::size_t step = 0;
    const bool use_dev = dev_x != nullptr && dev_labels != nullptr && dev_x->rows() > 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        const auto& order = orders[epoch];
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            batch_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
            BatchTargets bt = slice_targets(targets, batch_rows);
            const double loss = network_loss(net, x, batch_rows, bt, weights, &grad);
            if (!std::isfinite(loss))
                throw TrainingError(static_cast<int>(epoch + 1),
                                    "training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
            history.step_losses.push_back(loss);
            epoch_loss += loss;
            adam.step(net.params(), grad, scheduled_rate(config, step, total_steps));
            ++step;
        }
        for (double p : net.params())
            if (!std::isfinite(p))
                throw TrainingError(static_cast<int>(epoch + 1),
                                    "training diverged (non-finite parameters) in epoch " + std::to_string(epoch + 1));
        EpochRecord record{epoch_loss / static_cast<double>(batches_per_epoch), std::nullopt};
        if (use_dev) {
            record.dev_score = dev_score(net, *dev_x, *dev_labels);
            if (!best_score || *record.dev_score > *best_score) {
                best_score = record.dev_score;
                history.best_epoch = epoch + 1;
                best_params.assign(net.params().begin(), net.params().end());
            }
        }
        history.epochs.push_back(record);
    }
    if (use_dev) {
        std::copy(best_params.begin(), best_params.end(), net.params().begin());
    } else {
        history.best_epoch = config.epochs;
    }
    return history;
}

MultiTaskModel train_multitask(const Dataset& train, const std::optional<Dataset>& dev,
                               const std::vector<TaskSpec>& tasks, const TrainConfig& config, Regime regime) {
    if (!train.x || train.x->rows() == 0) throw DegenerateDataError("training data is empty");
    if (train.labels.size() != tasks.size()) throw ShapeError("one label column per task required");
    if (config.alpha < 0.0) throw ConfigError("alpha must be nonnegative");
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].n_classes < 2) throw ConfigError("task " + tasks[t].name + " needs at least two classes");
        if (tasks[t].weight < 0.0) throw ConfigError("task weights must be nonnegative");
        for (int y : train.labels[t])
            if (y < 0 || static_cast<std::size_t>(y) >= tasks[t].n_classes)
                throw ShapeError("label out of range for task " + tasks[t].name);
    }

    MultiTaskModel model;
    model.regime = regime;
    model.tasks = tasks;
    model.config = config;

    const bool uses_lp = regime == Regime::MTLPT || regime == Regime::MT_PLUS_MTLPT;
    std::vector<int> lp_gold;
    if (uses_lp) {
        auto lp = lp_transform(train.labels);
        model.lp_map = lp.map;
        lp_gold = std::move(lp.classes);
    }

    NetworkShape base;
    base.encoder = config.encoder;
    base.input_dim = train.x->cols();
    base.hidden = config.hidden;

    std::vector<std::vector<std::size_t>> groups;
    if (regime == Regime::MT || regime == Regime::MT_PLUS_MTLPT) {
        groups.emplace_back(tasks.size());
        std::iota(groups.back().begin(), groups.back().end(), 0);
    } else {
        for (std::size_t t = 0; t < tasks.size(); ++t) groups.push_back({t});
    }

    const features::FeatureMatrix* dev_x = dev ? dev->x : nullptr;
    const TaskLabels* dev_labels = dev ? &dev->labels : nullptr;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        NetworkShape shape = base;
        BatchTargets targets;
        LossWeights weights;
        for (auto t : groups[g]) {
            shape.tasks.push_back(t);
            shape.head_classes.push_back(tasks[t].n_classes);
            targets.heads.push_back(train.labels[t]);
            // Per-task networks optimise CE_i (+ alpha CE_lp); joint ones weight tasks by w_i.
            weights.heads.push_back(groups.size() > 1 ? 1.0 : tasks[t].weight);
        }
        if (uses_lp) {
            shape.lp_classes = model.lp_map->n_classes();
            targets.lp = lp_gold;
            weights.alpha = config.alpha;
        }
        Network net = initial_network(shape, config.seed, g);
        model.histories.push_back(train_network(net, *train.x, targets, weights, config, g, dev_x, dev_labels));
        model.networks.push_back(std::move(net));
    }
    return model;
}

TaskLabels predict_multitask(const MultiTaskModel& model, const features::FeatureMatrix& x) {
    TaskLabels out(model.tasks.size());
    std::vector<bool> covered(model.tasks.size(), false);
    for (const auto& net : model.networks) {
        auto logits = net.predict_logits(x);
        for (std::size_t h = 0; h < logits.size(); ++h) {
            const std::size_t t = net.shape().tasks[h];
            if (covered[t]) continue;
            out[t] = argmax_rows(logits[h]);
            covered[t] = true;
        }
    }
    for (std::size_t t = 0; t < covered.size(); ++t)
        if (!covered[t]) throw ShapeError("no network predicts task " + model.tasks[t].name);
    return out;
}

}  // namespace framing::models
