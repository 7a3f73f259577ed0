#pragma once

#include "framing/corpus.hpp"
#include "framing/features.hpp"
#include "framing/matrix.hpp"
#include "framing/random.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace framing::models {

// Per-task label columns: labels[t][i] is instance i's class for task t.
using TaskLabels = std::vector<std::vector<int>>;

TaskLabels task_labels(std::span<const corpus::LabelSet> labels);
std::vector<corpus::LabelSet> label_sets(const TaskLabels& labels);

// Label powerset: every observed combination of per-task labels becomes one class.
class LabelPowersetMap {
public:
    // kMasked for a combination that was never observed.
    int class_of(std::span<const int> combo) const;
    int class_of(const corpus::LabelSet& labels) const;
    const std::vector<int>& combo_of(int lp_class) const { return combos_[static_cast<std::size_t>(lp_class)]; }
    std::size_t n_classes() const { return combos_.size(); }
    const std::vector<std::vector<int>>& combos() const { return combos_; }

    // Combos are registered in the order given; duplicates are ignored.
    int add(std::vector<int> combo);

    friend bool operator==(const LabelPowersetMap& a, const LabelPowersetMap& b) { return a.combos_ == b.combos_; }

private:
    std::map<std::vector<int>, int> to_class_;
    std::vector<std::vector<int>> combos_;
};

struct LpTransform {
    LabelPowersetMap map;
    std::vector<int> classes;
};

// Classes are assigned in first-appearance order.
LpTransform lp_transform(const TaskLabels& labels);
LpTransform lp_transform(std::span<const corpus::LabelSet> labels);
// Class per instance under an existing map (kMasked for unseen combos).
std::vector<int> lp_classes(const LabelPowersetMap& map, const TaskLabels& labels);

enum class EncoderKind { Projection, Identity };

struct EncoderView {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::span<const double> weights;  // input_dim x hidden, row j = projection of feature j
    std::span<const double> bias;     // hidden
};

struct EncoderParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    EncoderView view() const { return {input_dim, hidden, weights, bias}; }
};

// h = relu(W^T x + b). Throws ShapeError on a width mismatch.
std::vector<double> encoder_forward(const EncoderView& encoder, std::span<const double> x);
// Sparse row form; writes the pre-activation and the activation.
void encoder_forward(const EncoderView& encoder, std::span<const std::size_t> indices,
                     std::span<const double> values, std::span<double> pre, std::span<double> h);

struct NetworkShape {
    EncoderKind encoder = EncoderKind::Projection;
    std::size_t input_dim = 0;
    std::size_t hidden = 64;  // ignored for the identity encoder
    std::vector<std::size_t> tasks;          // task index served by each head
    std::vector<std::size_t> head_classes;   // class count per head
    std::size_t lp_classes = 0;              // 0: no auxiliary head

    std::size_t representation_dim() const { return encoder == EncoderKind::Identity ? input_dim : hidden; }
    bool has_lp() const { return lp_classes > 0; }
    friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

// Shared encoder, one affine head per task, optional label-powerset head. All
// parameters live in one flat vector; the accessors below are views into it.
class Network {
public:
    Network() = default;
    explicit Network(NetworkShape shape);

    // Xavier-uniform weights, zero biases.
    static Network initialized(NetworkShape shape, Rng& rng);

    const NetworkShape& shape() const { return shape_; }
    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    EncoderView encoder() const;
    std::span<double> encoder_weights();
    std::span<double> encoder_bias();
    std::span<double> head_weights(std::size_t head);  // classes x representation
    std::span<double> head_bias(std::size_t head);
    std::span<const double> head_weights(std::size_t head) const;
    std::span<const double> head_bias(std::size_t head) const;
    std::span<double> lp_weights();
    std::span<double> lp_bias();
    std::span<const double> lp_weights() const;
    std::span<const double> lp_bias() const;

    // Index of the head serving a task, or nullopt.
    std::optional<std::size_t> head_for_task(std::size_t task) const;

    // Encoded representation of one feature row.
    std::vector<double> represent(const features::FeatureMatrix& x, std::size_t row) const;

    struct Outputs {
        std::vector<Matrix> heads;
        Matrix lp;  // empty when the network has no auxiliary head
    };
    Outputs forward(const features::FeatureMatrix& x, std::span<const std::size_t> rows) const;
    // Task heads only; the auxiliary head is never read.
    std::vector<Matrix> predict_logits(const features::FeatureMatrix& x) const;

private:
    struct Slice {
        std::size_t offset = 0;
        std::size_t size = 0;
    };
    std::span<double> slice(Slice s) { return {params_.data() + s.offset, s.size}; }
    std::span<const double> slice(Slice s) const { return {params_.data() + s.offset, s.size}; }

    NetworkShape shape_;
    std::vector<double> params_;
    Slice enc_w_, enc_b_, lp_w_, lp_b_;
    std::vector<Slice> head_w_, head_b_;
};

struct BatchTargets {
    TaskLabels heads;     // per head, aligned with the batch rows
    std::vector<int> lp;  // empty when there is no auxiliary head; kMasked entries skipped
};

struct LossWeights {
    std::vector<double> heads;  // w_i per head
    double alpha = 0.0;
};

// Value of combined_loss for the batch; fills grad (same layout as params) when given.
double network_loss(const Network& net, const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                    const BatchTargets& targets, const LossWeights& weights, std::vector<double>* grad);

using LossFunction = std::function<double(std::span<const double> params, std::vector<double>* grad)>;

// Max over probed coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6),
// numeric from central differences with the given step.
double gradient_check(const LossFunction& loss, std::span<const double> params, std::size_t probes,
                      std::uint64_t seed, double step = 1e-5);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(std::size_t n, AdamOptions options = {}) : options_(options), m_(n, 0.0), v_(n, 0.0) {}
    void step(std::span<double> params, std::span<const double> grad, double learning_rate);
    std::size_t steps() const { return t_; }

private:
    AdamOptions options_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

}  // namespace framing::models
