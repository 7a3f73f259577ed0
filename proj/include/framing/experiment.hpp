#pragma once

#include "framing/checkpoint.hpp"
#include "framing/corpus.hpp"
#include "framing/features.hpp"
#include "framing/metrics.hpp"
#include "framing/svm.hpp"
#include "framing/training.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace framing::eval {

enum class ModelKind { Uniform, Stratified, Svm, Neural };

struct ModelSpec {
    std::string name;  // uniform | stratified | svm | mt | mtlpt | mt_mtlpt | single
    ModelKind kind = ModelKind::Neural;
    models::Regime regime = models::Regime::MT;
    models::TrainConfig train;
    std::vector<double> c_grid = models::kDefaultCGrid;
    models::SvmOptions svm;
};

// Throws ConfigError for an unknown model name.
ModelSpec model_spec(std::string_view name, const models::TrainConfig& train = {},
                     const std::vector<double>& c_grid = models::kDefaultCGrid);

nlohmann::json to_json(const ModelSpec& spec);

// Generic task data for the harness; ids and texts align with the label columns.
struct ExperimentData {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    models::TaskLabels labels;
    std::vector<models::TaskSpec> tasks;
    std::vector<std::vector<std::string>> class_names;  // per task
};

ExperimentData experiment_data(const std::vector<corpus::AnnotatedHeadline>& records);

struct FeatureOptions {
    std::size_t min_df = 1;
    // When set, features come from this table and neural models use the identity encoder.
    const features::EmbeddingTable* embeddings = nullptr;
};

struct FoldFeatures {
    features::FeatureMatrix train, dev, test;
    std::string vocab_hash;
    std::optional<features::Vocabulary> vocab;
};

// Fits the vocabulary on `fit_rows` only.
FoldFeatures fold_features(const ExperimentData& data, const std::vector<std::size_t>& train_rows,
                           const std::vector<std::size_t>& dev_rows, const std::vector<std::size_t>& test_rows,
                           const FeatureOptions& options);

struct FoldResult {
    std::size_t fold = 0;
    std::vector<std::vector<LabelScores>> scores;  // [task][class]
    std::vector<double> macro_f1;                  // per task, over the task's classes
    std::vector<ConfusionMatrix> confusion;        // per task
    nlohmann::json selection;                      // chosen C / best epochs
};

struct CvReport {
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::vector<models::TaskSpec> tasks;
    std::vector<std::vector<std::string>> class_names;
    std::vector<FoldResult> folds;
    std::vector<std::vector<double>> mean_f1;  // [task][class], mean over folds
    std::vector<double> mean_macro_f1;         // per task

    // Mean over tasks of mean_macro_f1.
    double overall_macro_f1() const;
};

// Per fold: fit on train, select hyperparameters on dev, score on test.
// `threads` > 1 runs folds concurrently; results do not depend on it.
CvReport run_cv_experiment(const ExperimentData& data, const ModelSpec& spec, const corpus::SplitPlan& plan,
                           const FeatureOptions& features = {}, std::size_t threads = 1);

// Trains one model on the given rows (for checkpoints and single runs).
models::TrainedModel train_model(const ModelSpec& spec, const ExperimentData& data, const features::FeatureMatrix& train_x,
                                 const std::vector<std::size_t>& train_rows, const features::FeatureMatrix& dev_x,
                                 const std::vector<std::size_t>& dev_rows, std::uint64_t seed, nlohmann::json* selection);

nlohmann::json to_json(const CvReport& report);
// Table with one row per model and one F1 column per class.
std::string to_csv(const std::vector<CvReport>& reports);

}  // namespace framing::eval
