#include "framing/network.hpp"

#include "framing/errors.hpp"
#include "framing/losses.hpp"

#include <algorithm>
#include <cmath>

namespace framing::models {

TaskLabels task_labels(std::span<const corpus::LabelSet> labels) {
    TaskLabels out(2);
    for (const auto& l : labels) {
        out[0].push_back(static_cast<int>(l.perception));
        out[1].push_back(static_cast<int>(l.accident));
    }
    return out;
}

std::vector<corpus::LabelSet> label_sets(const TaskLabels& labels) {
    if (labels.size() != 2 || labels[0].size() != labels[1].size())
        throw ShapeError("label sets need exactly two aligned tasks");
    std::vector<corpus::LabelSet> out;
    for (std::size_t i = 0; i < labels[0].size(); ++i)
        out.push_back({static_cast<corpus::Perception>(labels[0][i]), static_cast<corpus::Accident>(labels[1][i])});
    return out;
}

int LabelPowersetMap::class_of(std::span<const int> combo) const {
    auto it = to_class_.find(std::vector<int>(combo.begin(), combo.end()));
    return it == to_class_.end() ? kMasked : it->second;
}

int LabelPowersetMap::class_of(const corpus::LabelSet& labels) const {
    const int combo[2] = {static_cast<int>(labels.perception), static_cast<int>(labels.accident)};
    return class_of(combo);
}

int LabelPowersetMap::add(std::vector<int> combo) {
    auto [it, inserted] = to_class_.emplace(combo, static_cast<int>(combos_.size()));
    if (inserted) combos_.push_back(std::move(combo));
    return it->second;
}

LpTransform lp_transform(const TaskLabels& labels) {
    LpTransform out;
    if (labels.empty()) return out;
    const std::size_t n = labels[0].size();
    for (const auto& t : labels)
        if (t.size() != n) throw ShapeError("task label columns differ in length");
    std::vector<int> combo(labels.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < labels.size(); ++t) combo[t] = labels[t][i];
        out.classes.push_back(out.map.add(combo));
    }
    return out;
}

LpTransform lp_transform(std::span<const corpus::LabelSet> labels) { return lp_transform(task_labels(labels)); }

std::vector<int> lp_classes(const LabelPowersetMap& map, const TaskLabels& labels) {
    std::vector<int> out;
    if (labels.empty()) return out;
    std::vector<int> combo(labels.size());
    for (std::size_t i = 0; i < labels[0].size(); ++i) {
        for (std::size_t t = 0; t < labels.size(); ++t) combo[t] = labels[t][i];
        out.push_back(map.class_of(combo));
    }
    return out;
}

std::vector<double> encoder_forward(const EncoderView& encoder, std::span<const double> x) {
    if (x.size() != encoder.input_dim)
        throw ShapeError("encoder expects " + std::to_string(encoder.input_dim) + " inputs, got " +
                         std::to_string(x.size()));
    std::vector<double> h(encoder.bias.begin(), encoder.bias.end());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] == 0.0) continue;
        const double* w = encoder.weights.data() + j * encoder.hidden;
        for (std::size_t k = 0; k < encoder.hidden; ++k) h[k] += x[j] * w[k];
    }
    for (double& v : h) v = std::max(v, 0.0);
    return h;
}

void encoder_forward(const EncoderView& encoder, std::span<const std::size_t> indices,
                     std::span<const double> values, std::span<double> pre, std::span<double> h) {
    std::copy(encoder.bias.begin(), encoder.bias.end(), pre.begin());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= encoder.input_dim) throw ShapeError("feature index exceeds encoder input width");
        const double* w = encoder.weights.data() + indices[i] * encoder.hidden;
        const double x = values[i];
        for (std::size_t k = 0; k < encoder.hidden; ++k) pre[k] += x * w[k];
    }
    for (std::size_t k = 0; k < encoder.hidden; ++k) h[k] = std::max(pre[k], 0.0);
}

Network::Network(NetworkShape shape) : shape_(std::move(shape)) {
    if (shape_.tasks.size() != shape_.head_classes.size()) throw ShapeError("one class count per head required");
    if (shape_.tasks.empty()) throw ShapeError("a network needs at least one task head");
    for (auto c : shape_.head_classes)
        if (c < 2) throw ShapeError("every task needs at least two classes");
    const std::size_t rep = shape_.representation_dim();
    if (rep == 0) throw ShapeError("representation width must be positive");
    std::size_t offset = 0;
    auto take = [&](std::size_t n) {
        Slice s{offset, n};
        offset += n;
        return s;
    };
    if (shape_.encoder == EncoderKind::Projection) {
        enc_w_ = take(shape_.input_dim * shape_.hidden);
        enc_b_ = take(shape_.hidden);
    }
    for (auto c : shape_.head_classes) {
        head_w_.push_back(take(c * rep));
        head_b_.push_back(take(c));
    }
    if (shape_.has_lp()) {
        lp_w_ = take(shape_.lp_classes * rep);
        lp_b_ = take(shape_.lp_classes);
    }
    params_.assign(offset, 0.0);
}

Network Network::initialized(NetworkShape shape, Rng& rng) {
    Network net(std::move(shape));
    const std::size_t rep = net.shape_.representation_dim();
    auto fill = [&](std::span<double> w, std::size_t fan_in, std::size_t fan_out) {
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w) v = rng.uniform(-a, a);
    };
    if (net.shape_.encoder == EncoderKind::Projection)
        fill(net.encoder_weights(), net.shape_.input_dim, net.shape_.hidden);
    for (std::size_t h = 0; h < net.shape_.tasks.size(); ++h)
        fill(net.head_weights(h), rep, net.shape_.head_classes[h]);
    if (net.shape_.has_lp()) fill(net.lp_weights(), rep, net.shape_.lp_classes);
    return net;
}

EncoderView Network::encoder() const {
    return {shape_.input_dim, shape_.hidden, slice(enc_w_), slice(enc_b_)};
}
std::span<double> Network::encoder_weights() { return slice(enc_w_); }
std::span<double> Network::encoder_bias() { return slice(enc_b_); }
std::span<double> Network::head_weights(std::size_t head) { return slice(head_w_.at(head)); }
std::span<double> Network::head_bias(std::size_t head) { return slice(head_b_.at(head)); }
std::span<const double> Network::head_weights(std::size_t head) const { return slice(head_w_.at(head)); }
std::span<const double> Network::head_bias(std::size_t head) const { return slice(head_b_.at(head)); }
std::span<double> Network::lp_weights() { return slice(lp_w_); }
std::span<double> Network::lp_bias() { return slice(lp_b_); }
std::span<const double> Network::lp_weights() const { return slice(lp_w_); }
std::span<const double> Network::lp_bias() const { return slice(lp_b_); }

std::optional<std::size_t> Network::head_for_task(std::size_t task) const {
    for (std::size_t h = 0; h < shape_.tasks.size(); ++h)
        if (shape_.tasks[h] == task) return h;
    return std::nullopt;
}

std::vector<double> Network::represent(const features::FeatureMatrix& x, std::size_t row) const {
    if (x.cols() != shape_.input_dim)
        throw ShapeError("feature width " + std::to_string(x.cols()) + " does not match network input " +
                         std::to_string(shape_.input_dim));
    if (shape_.encoder == EncoderKind::Identity) return x.dense_row(row);
    std::vector<double> pre(shape_.hidden), h(shape_.hidden);
    encoder_forward(encoder(), x.row_indices(row), x.row_values(row), pre, h);
    return h;
}

namespace {

void affine(std::span<const double> w, std::span<const double> b, std::span<const double> h, std::span<double> out) {
    const std::size_t in = h.size();
    for (std::size_t c = 0; c < out.size(); ++c) {
        const double* wc = w.data() + c * in;
        double s = b[c];
        for (std::size_t k = 0; k < in; ++k) s += wc[k] * h[k];
        out[c] = s;
    }
}

}  // namespace

Network::Outputs Network::forward(const features::FeatureMatrix& x, std::span<const std::size_t> rows) const {
    Outputs out;
    for (auto c : shape_.head_classes) out.heads.emplace_back(rows.size(), c);
    if (shape_.has_lp()) out.lp = Matrix(rows.size(), shape_.lp_classes);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto h = represent(x, rows[r]);
        for (std::size_t hd = 0; hd < out.heads.size(); ++hd)
            affine(head_weights(hd), head_bias(hd), h, out.heads[hd].row(r));
        if (shape_.has_lp()) affine(lp_weights(), lp_bias(), h, out.lp.row(r));
    }
    return out;
}

std::vector<Matrix> Network::predict_logits(const features::FeatureMatrix& x) const {
    std::vector<Matrix> out;
    for (auto c : shape_.head_classes) out.emplace_back(x.rows(), c);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto h = represent(x, r);
        for (std::size_t hd = 0; hd < out.size(); ++hd) affine(head_weights(hd), head_bias(hd), h, out[hd].row(r));
    }
    return out;
}

double network_loss(const Network& net, const features::FeatureMatrix& x, std::span<const std::size_t> rows,
                    const BatchTargets& targets, const LossWeights& weights, std::vector<double>* grad) {
    const auto& shape = net.shape();
    const std::size_t n_heads = shape.tasks.size();
    if (targets.heads.size() != n_heads || weights.heads.size() != n_heads)
        throw ShapeError("targets and weights must cover every head");
    if (shape.has_lp() && targets.lp.size() != rows.size())
        throw ShapeError("auxiliary targets must cover every batch row");
    if (x.cols() != shape.input_dim) throw ShapeError("feature width does not match network input");

    const std::size_t rep = shape.representation_dim();
    const std::size_t batch = rows.size();
    std::vector<std::vector<double>> pre(batch), hidden(batch);
    Network::Outputs out;
    for (auto c : shape.head_classes) out.heads.emplace_back(batch, c);
    if (shape.has_lp()) out.lp = Matrix(batch, shape.lp_classes);
    for (std::size_t r = 0; r < batch; ++r) {
        if (shape.encoder == EncoderKind::Projection) {
            pre[r].resize(rep);
            hidden[r].resize(rep);
            encoder_forward(net.encoder(), x.row_indices(rows[r]), x.row_values(rows[r]), pre[r], hidden[r]);
        } else {
            hidden[r] = x.dense_row(rows[r]);
        }
        for (std::size_t hd = 0; hd < n_heads; ++hd)
            affine(net.head_weights(hd), net.head_bias(hd), hidden[r], out.heads[hd].row(r));
        if (shape.has_lp()) affine(net.lp_weights(), net.lp_bias(), hidden[r], out.lp.row(r));
    }

    const double alpha = shape.has_lp() ? weights.alpha : 0.0;
    const Matrix empty_lp(batch, 1);
    const std::vector<int> no_lp(batch, kMasked);
    const double loss = combined_loss(out.heads, shape.has_lp() ? out.lp : empty_lp, targets.heads,
                                      shape.has_lp() ? std::span<const int>(targets.lp) : std::span<const int>(no_lp),
                                      weights.heads, alpha);
    if (!grad) return loss;

    Network g(shape);
    std::size_t lp_used = 0;
    if (shape.has_lp())
        lp_used = static_cast<std::size_t>(std::count_if(targets.lp.begin(), targets.lp.end(), [](int v) { return v >= 0; }));

    std::vector<double> d_hidden(rep);
    // dL/dlogits for softmax cross-entropy is (p - onehot) times the term's scale.
    auto backprop_head = [&](std::span<const double> logits, int gold, double scale, std::span<const double> w,
                             std::span<double> gw, std::span<double> gb, const std::vector<double>& h) {
        auto p = softmax(logits);
        p[static_cast<std::size_t>(gold)] -= 1.0;
        for (std::size_t c = 0; c < p.size(); ++c) {
            const double d = p[c] * scale;
            if (d == 0.0) continue;
            gb[c] += d;
            double* gwc = gw.data() + c * rep;
            const double* wc = w.data() + c * rep;
            for (std::size_t k = 0; k < rep; ++k) {
                gwc[k] += d * h[k];
                d_hidden[k] += d * wc[k];
            }
        }
    };

    for (std::size_t r = 0; r < batch; ++r) {
        std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
        for (std::size_t hd = 0; hd < n_heads; ++hd) {
            if (weights.heads[hd] == 0.0) continue;
            backprop_head(out.heads[hd].row(r), targets.heads[hd][r], weights.heads[hd] / static_cast<double>(batch),
                          net.head_weights(hd), g.head_weights(hd), g.head_bias(hd), hidden[r]);
        }
        if (alpha != 0.0 && targets.lp[r] >= 0)
            backprop_head(out.lp.row(r), targets.lp[r], alpha / static_cast<double>(lp_used), net.lp_weights(),
                          g.lp_weights(), g.lp_bias(), hidden[r]);
        if (shape.encoder != EncoderKind::Projection) continue;
        auto gb = g.encoder_bias();
        auto gw = g.encoder_weights();
        for (std::size_t k = 0; k < rep; ++k)
            if (pre[r][k] <= 0.0) d_hidden[k] = 0.0;
        for (std::size_t k = 0; k < rep; ++k) gb[k] += d_hidden[k];
        auto idx = x.row_indices(rows[r]);
        auto val = x.row_values(rows[r]);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            double* gwj = gw.data() + idx[i] * rep;
            for (std::size_t k = 0; k < rep; ++k) gwj[k] += val[i] * d_hidden[k];
        }
    }
    auto p = g.params();
    grad->assign(p.begin(), p.end());
    return loss;
}

double gradient_check(const LossFunction& loss, std::span<const double> params, std::size_t probes,
                      std::uint64_t seed, double step) {
    if (params.empty()) return 0.0;
    std::vector<double> grad;
    loss(params, &grad);
    if (grad.size() != params.size()) throw ShapeError("gradient length differs from parameter count");
    std::vector<double> probe(params.begin(), params.end());
    Rng rng(seed);
    double worst = 0.0;
    for (std::size_t p = 0; p < probes; ++p) {
        const std::size_t i = rng.index(params.size());
        const double saved = probe[i];
        probe[i] = saved + step;
        const double up = loss(probe, nullptr);
        probe[i] = saved - step;
        const double down = loss(probe, nullptr);
        probe[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(grad[i]), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
    }
    return worst;
}

void Adam::step(std::span<double> params, std::span<const double> grad, double learning_rate) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("Adam state size mismatch");
    ++t_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        params[i] -= learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + options_.epsilon);
    }
}

}  // namespace framing::models
