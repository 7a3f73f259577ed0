#pragma once

#include "framing/features.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace framing::models {

// One-vs-rest linear SVM with squared hinge loss and L2 regularisation,
//   min_w 1/2 |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))^2,
// with the bias treated as a weight on a constant feature. A two-class problem
// uses a single binary machine.
struct LinearSvmModel {
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    double c = 1.0;
    std::vector<int> machine_class;            // positive class of each machine
    std::vector<std::vector<double>> weights;  // per machine
    std::vector<double> bias;                  // per machine
};

struct SvmOptions {
    double tolerance = 1e-3;       // projected-gradient gap stopping rule
    std::size_t max_passes = 1000;
    std::uint64_t seed = 1;        // coordinate visiting order
};

// Throws DegenerateDataError when fewer than two classes occur in y.
LinearSvmModel fit_linear_svm(const features::FeatureMatrix& x, std::span<const int> y, std::size_t n_classes,
                              double c, const SvmOptions& options = {});

struct CScore {
    double c = 0.0;
    double dev_macro_f1 = 0.0;
};

struct SvmSelection {
    LinearSvmModel model;
    std::vector<CScore> scores;
};

// Fits one machine per grid value and keeps the best dev macro-F1; ties go to the smaller C.
SvmSelection train_linear_svm(const features::FeatureMatrix& x, std::span<const int> y, std::size_t n_classes,
                              std::span<const double> c_grid, const features::FeatureMatrix& dev_x,
                              std::span<const int> dev_y, const SvmOptions& options = {});

std::vector<double> decision_values(const LinearSvmModel& model, const features::FeatureMatrix& x, std::size_t row);
std::vector<int> predict(const LinearSvmModel& model, const features::FeatureMatrix& x);

inline const std::vector<double> kDefaultCGrid{0.0001, 0.001, 0.01, 0.1, 1, 10};

}  // namespace framing::models
