#pragma once

#include "framing/network.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framing::models {

// MT: one joint network over all tasks.
// MTLPT: one network per task, each with the label-powerset auxiliary head.
// MT_PLUS_MTLPT: one joint network plus the auxiliary head.
// Single: one plain network per task (no auxiliary head).
enum class Regime { MT, MTLPT, MT_PLUS_MTLPT, Single };

std::string_view to_string(Regime r);
// Accepts "mt", "mtlpt", "mt_mtlpt" (or "mt+mtlpt"), "single". Throws ConfigError.
Regime regime_from_string(std::string_view s);

enum class Schedule { Fixed, Cosine };
std::string_view to_string(Schedule s);
Schedule schedule_from_string(std::string_view s);

struct TaskSpec {
    std::string name;
    std::size_t n_classes = 2;
    double weight = 1.0;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

// Perception (3 classes) and accident (4 classes), both weighted 1.
std::vector<TaskSpec> default_tasks();

struct TrainConfig {
    double learning_rate = 2e-3;
    std::size_t epochs = 25;
    std::size_t batch_size = 8;
    std::uint64_t seed = 13;
    double alpha = 1.0;
    Schedule schedule = Schedule::Cosine;
    EncoderKind encoder = EncoderKind::Projection;
    std::size_t hidden = 64;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Learning rate for a step under the schedule (cosine decays to 0 over
// total_steps, no warm-up).
double scheduled_rate(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct EpochRecord {
    double mean_loss = 0.0;
    std::optional<double> dev_score;
};

struct TrainHistory {
    std::vector<double> step_losses;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based
};

struct MultiTaskModel {
    Regime regime = Regime::MT;
    std::vector<TaskSpec> tasks;
    TrainConfig config;
    std::optional<LabelPowersetMap> lp_map;
    std::vector<Network> networks;
    std::vector<TrainHistory> histories;
};

struct Dataset {
    const features::FeatureMatrix* x = nullptr;
    TaskLabels labels;
};

// Per-epoch instance order for one network: shuffled by a generator derived
// from (seed, stream).
std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n_items, std::size_t epochs, std::uint64_t seed,
                                                   std::uint64_t stream);

// Initial parameters for network number `stream` of a model.
Network initial_network(const NetworkShape& shape, std::uint64_t seed, std::uint64_t stream);

// Trains one network in place with mini-batch Adam. After every epoch the dev
// score (mean macro-F1 over the network's heads) is computed when dev data is
// given, and the best epoch's parameters are kept; ties keep the earlier epoch.
TrainHistory train_network(Network& net, const features::FeatureMatrix& x, const BatchTargets& targets,
                           const LossWeights& weights, const TrainConfig& config, std::uint64_t stream,
                           const features::FeatureMatrix* dev_x = nullptr, const TaskLabels* dev_labels = nullptr);

MultiTaskModel train_multitask(const Dataset& train, const std::optional<Dataset>& dev,
                               const std::vector<TaskSpec>& tasks, const TrainConfig& config, Regime regime);

// Argmax per task; ties resolve to the lowest class index.
TaskLabels predict_multitask(const MultiTaskModel& model, const features::FeatureMatrix& x);

std::vector<int> argmax_rows(const Matrix& logits);

}  // namespace framing::models
