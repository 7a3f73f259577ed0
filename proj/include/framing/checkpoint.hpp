#pragma once

#include "framing/svm.hpp"
#include "framing/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <variant>

namespace framing::models {

// One SVM per task.
struct SvmBundle {
    std::vector<TaskSpec> tasks;
    std::vector<LinearSvmModel> per_task;
};

using TrainedModel = std::variant<MultiTaskModel, SvmBundle>;

TaskLabels predict(const TrainedModel& model, const features::FeatureMatrix& x);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    TrainedModel model;
    // Digest of the feature space (vocabulary or embedding table) the model was trained on.
    std::string vocab_hash;
    nlohmann::json metadata;
};

nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws ValidationError("vocab_hash") when expected_vocab_hash is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_vocab_hash = std::nullopt);

}  // namespace framing::models
