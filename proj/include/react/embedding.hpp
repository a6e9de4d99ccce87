#pragma once

// Metric embedding: a tanh multilayer perceptron mapping fixed-length view
// descriptors to (optionally unit-norm) embeddings, trained with a hinged
// triplet loss, online semi-hard mining and Adam.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "react/augment.hpp"
#include "react/common.hpp"

namespace react {

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  /// outputs x inputs, row-major.
  Vector weights;
  Vector bias;

  bool operator==(const DenseLayer&) const = default;
};

class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  /// Glorot-uniform weights and zero biases drawn from `seed`.
  static EmbeddingModel create(std::vector<std::size_t> layer_dims,
                               std::uint64_t seed, bool normalize_output = true,
                               double margin_alpha = 1.0) {
    EmbeddingModel m;
    m.layer_dims_ = std::move(layer_dims);
    m.normalize_output_ = normalize_output;
    m.margin_alpha_ = margin_alpha;
    m.check_dims();
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < m.layer_dims_.size(); ++l) {
      DenseLayer layer;
      layer.inputs = m.layer_dims_[l];
      layer.outputs = m.layer_dims_[l + 1];
      const double limit =
          std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
      std::uniform_real_distribution<double> dist(-limit, limit);
      layer.weights.resize(layer.inputs * layer.outputs);
      for (double& w : layer.weights) w = dist(rng);
      layer.bias.assign(layer.outputs, 0.0);
      m.layers_.push_back(std::move(layer));
    }
    m.validate();
    return m;
  }

  /// Builds a model from explicit layers; validates shapes.
  static EmbeddingModel from_layers(std::vector<DenseLayer> layers,
                                    bool normalize_output, double margin_alpha) {
    EmbeddingModel m;
    if (layers.empty())
      throw Error(ErrorKind::validation, "EmbeddingModel: no layers");
    m.layer_dims_.push_back(layers.front().inputs);
    for (const auto& l : layers) m.layer_dims_.push_back(l.outputs);
    m.layers_ = std::move(layers);
    m.normalize_output_ = normalize_output;
    m.margin_alpha_ = margin_alpha;
    m.validate();
    return m;
  }

  const std::vector<std::size_t>& layer_dims() const noexcept { return layer_dims_; }
  std::size_t input_dim() const { return layer_dims_.front(); }
  std::size_t output_dim() const { return layer_dims_.back(); }
  bool normalize_output() const noexcept { return normalize_output_; }
  double margin() const noexcept { return margin_alpha_; }

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  void validate() const {
    check_dims();
    if (layers_.size() + 1 != layer_dims_.size())
      throw Error(ErrorKind::validation, "EmbeddingModel: layer count mismatch");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (layer.inputs != layer_dims_[l] || layer.outputs != layer_dims_[l + 1] ||
          layer.weights.size() != layer.inputs * layer.outputs ||
          layer.bias.size() != layer.outputs)
        throw Error(ErrorKind::validation,
                    "EmbeddingModel: layer " + std::to_string(l) +
                        " shape inconsistent with layer_dims");
      if (!all_finite(layer.weights) || !all_finite(layer.bias))
        throw Error(ErrorKind::validation,
                    "EmbeddingModel: non-finite parameter in layer " +
                        std::to_string(l));
    }
    if (!(margin_alpha_ > 0.0) || !std::isfinite(margin_alpha_))
      throw Error(ErrorKind::validation, "EmbeddingModel: margin must be > 0");
  }

  bool operator==(const EmbeddingModel&) const = default;

 private:
  void check_dims() const {
    if (layer_dims_.size() < 2)
      throw Error(ErrorKind::validation,
                  "EmbeddingModel: need at least input and output dims");
    for (auto d : layer_dims_)
      if (d == 0)
        throw Error(ErrorKind::validation, "EmbeddingModel: zero layer width");
  }

  std::vector<std::size_t> layer_dims_;
  std::vector<DenseLayer> layers_;
  bool normalize_output_ = true;
  double margin_alpha_ = 1.0;
};

/// Per-layer activations of one forward pass, kept for backpropagation.
struct ForwardTrace {
  /// activations[0] is the input, activations.back() the raw output.
  std::vector<Vector> activations;
  Vector output;
  double raw_norm = 0.0;
};

namespace detail {

inline void check_input(const EmbeddingModel& model,
                        std::span<const double> descriptor) {
  if (descriptor.size() != model.input_dim())
    throw Error(ErrorKind::dimension,
                "embed: descriptor length " + std::to_string(descriptor.size()) +
                    " != model input " + std::to_string(model.input_dim()));
  if (!all_finite(descriptor))
    throw Error(ErrorKind::validation, "embed: non-finite descriptor");
}

}  // namespace detail

inline ForwardTrace forward(const EmbeddingModel& model,
                            std::span<const double> descriptor) {
  detail::check_input(model, descriptor);
  ForwardTrace t;
  t.activations.emplace_back(descriptor.begin(), descriptor.end());
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const Vector& in = t.activations.back();
    Vector out(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double s = layer.bias[o];
      const double* w = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) s += w[i] * in[i];
      out[o] = (l + 1 < layers.size()) ? std::tanh(s) : s;
    }
    t.activations.push_back(std::move(out));
  }
  const Vector& raw = t.activations.back();
  double sq = 0.0;
  for (double x : raw) sq += x * x;
  t.raw_norm = std::sqrt(sq);
  t.output = raw;
  if (model.normalize_output()) {
    if (t.raw_norm == 0.0)
      throw Error(ErrorKind::validation,
                  "embed: zero output vector cannot be normalized");
    for (double& x : t.output) x /= t.raw_norm;
  }
  return t;
}

/// Embedding of one descriptor. Deterministic; unit-norm when the model
/// normalizes its output.
inline Vector embed(const EmbeddingModel& model,
                    std::span<const double> descriptor) {
  return forward(model, descriptor).output;
}

inline double triplet_loss(std::span<const double> anchor,
                           std::span<const double> positive,
                           std::span<const double> negative, double alpha) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size())
    throw Error(ErrorKind::dimension, "triplet_loss: length mismatch");
  const double v = squared_distance(anchor, positive) -
                   squared_distance(anchor, negative) + alpha;
  return v > 0.0 ? v : 0.0;
}

/// Gradients laid out like the model's layers.
struct ParameterGradients {
  std::vector<DenseLayer> layers;

  static ParameterGradients zeros_like(const EmbeddingModel& model) {
    ParameterGradients g;
    for (const auto& l : model.layers()) {
      DenseLayer z;
      z.inputs = l.inputs;
      z.outputs = l.outputs;
      z.weights.assign(l.weights.size(), 0.0);
      z.bias.assign(l.bias.size(), 0.0);
      g.layers.push_back(std::move(z));
    }
    return g;
  }

  bool all_zero() const {
    for (const auto& l : layers) {
      for (double x : l.weights)
        if (x != 0.0) return false;
      for (double x : l.bias)
        if (x != 0.0) return false;
    }
    return true;
  }
};

/// Accumulates d(loss)/d(params) for one forward trace given d(loss)/d(output).
inline void backpropagate(const EmbeddingModel& model, const ForwardTrace& trace,
                          std::span<const double> grad_output,
                          ParameterGradients& grads) {
  const auto& layers = model.layers();
  Vector delta(grad_output.begin(), grad_output.end());
  if (model.normalize_output()) {
    // d(z/|z|)/dz = (I - f f^T) / |z|
    double dot = 0.0;
    for (std::size_t k = 0; k < delta.size(); ++k) dot += delta[k] * trace.output[k];
    for (std::size_t k = 0; k < delta.size(); ++k)
      delta[k] = (delta[k] - trace.output[k] * dot) / trace.raw_norm;
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    auto& g = grads.layers[l];
    const Vector& in = trace.activations[l];
    if (l + 1 < layers.size()) {
      const Vector& out = trace.activations[l + 1];
      for (std::size_t o = 0; o < layer.outputs; ++o)
        delta[o] *= 1.0 - out[o] * out[o];
    }
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      g.bias[o] += delta[o];
      double* gw = g.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) gw[i] += delta[o] * in[i];
    }
    if (l == 0) break;
    Vector prev(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weights.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += w[i] * delta[o];
    }
    delta = std::move(prev);
  }
}

struct TripletIndices {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  /// False when the negative came from the hardest-negative fallback.
  bool semi_hard = true;

  bool operator==(const TripletIndices&) const = default;
};

struct TripletGradient {
  double loss = 0.0;
  ParameterGradients grads;
};

/// Loss and parameter gradients of a single triplet of descriptors.
inline TripletGradient triplet_loss_grad(const EmbeddingModel& model,
                                         std::span<const double> anchor,
                                         std::span<const double> positive,
                                         std::span<const double> negative,
                                         double alpha) {
  const ForwardTrace ta = forward(model, anchor);
  const ForwardTrace tp = forward(model, positive);
  const ForwardTrace tn = forward(model, negative);
  TripletGradient out;
  out.grads = ParameterGradients::zeros_like(model);
  out.loss = triplet_loss(ta.output, tp.output, tn.output, alpha);
  if (out.loss <= 0.0) return out;

  const std::size_t e = ta.output.size();
  Vector ga(e), gp(e), gn(e);
  for (std::size_t k = 0; k < e; ++k) {
    ga[k] = 2.0 * (tn.output[k] - tp.output[k]);
    gp[k] = -2.0 * (ta.output[k] - tp.output[k]);
    gn[k] = 2.0 * (ta.output[k] - tn.output[k]);
  }
  backpropagate(model, ta, ga, out.grads);
  backpropagate(model, tp, gp, out.grads);
  backpropagate(model, tn, gn, out.grads);
  return out;
}

/// Online triplet mining over a batch, squared Euclidean distances.
///
/// For every ordered anchor-positive pair the semi-hard negative closest to
/// the anchor inside d(a,p) < d(a,n) < d(a,p) + alpha is chosen. When the
/// band is empty and `hard_fallback` is set, the hardest negative is used if
/// it violates the margin (d(a,n) <= d(a,p)). Pairs whose every negative is
/// already beyond the margin are skipped.
inline std::vector<TripletIndices> mine_semi_hard(
    const std::vector<Vector>& embeddings, const std::vector<int>& labels,
    double alpha, bool hard_fallback = true) {
  std::vector<TripletIndices> out;
  const std::size_t n = embeddings.size();
  if (labels.size() != n)
    throw Error(ErrorKind::dimension, "mine_semi_hard: labels/embeddings size");
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i * n + j] = dist[j * n + i] =
          squared_distance(embeddings[i], embeddings[j]);

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const double dap = dist[a * n + p];
      std::size_t semi = n, hardest = n;
      double semi_d = std::numeric_limits<double>::infinity();
      double hard_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        if (labels[k] == labels[a]) continue;
        const double dan = dist[a * n + k];
        if (dan > dap && dan < dap + alpha && dan < semi_d) {
          semi_d = dan;
          semi = k;
        }
        if (dan < hard_d) {
          hard_d = dan;
          hardest = k;
        }
      }
      if (semi < n)
        out.push_back({a, p, semi, true});
      else if (hard_fallback && hardest < n && hard_d <= dap)
        out.push_back({a, p, hardest, false});
    }
  }
  return out;
}

// Training --------------------------------------------------------------------

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.001;
  int batch_size = 64;
  int views_per_label = 4;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool hard_fallback = true;
  AugmentConfig augmentation;

  void validate() const {
    if (epochs < 1)
      throw Error(ErrorKind::validation, "TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0))
      throw Error(ErrorKind::validation, "TrainConfig: learning_rate must be > 0");
    if (batch_size < 2)
      throw Error(ErrorKind::validation, "TrainConfig: batch_size must be >= 2");
    if (views_per_label < 2)
      throw Error(ErrorKind::validation,
                  "TrainConfig: views_per_label must be >= 2");
    augmentation.validate();
  }
};

struct LabeledDescriptor {
  Vector descriptor;
  int label = 0;
};

struct TripletDataset {
  std::vector<LabeledDescriptor> items;

  std::map<int, std::vector<std::size_t>> by_label() const {
    std::map<int, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < items.size(); ++i) out[items[i].label].push_back(i);
    return out;
  }

  void validate(std::size_t descriptor_dim) const {
    const auto groups = by_label();
    if (groups.size() < 2)
      throw Error(ErrorKind::validation,
                  "TripletDataset: need at least 2 labels, have " +
                      std::to_string(groups.size()));
    for (const auto& [label, idx] : groups)
      if (idx.size() < 2)
        throw Error(ErrorKind::validation,
                    "TripletDataset: label " + std::to_string(label) +
                        " has fewer than 2 items");
    for (const auto& it : items) {
      if (it.descriptor.size() != descriptor_dim)
        throw Error(ErrorKind::dimension,
                    "TripletDataset: descriptor length mismatch");
      if (!all_finite(it.descriptor))
        throw Error(ErrorKind::validation, "TripletDataset: non-finite item");
    }
  }
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double active_triplet_fraction = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochStats> curve;
};

struct BatchLoss {
  double mean_loss = 0.0;
  std::size_t triplets = 0;
  std::size_t active = 0;
  ParameterGradients grads;  // gradient of mean_loss
};

/// Mines a batch and returns the mean hinge loss over mined triplets with
/// its gradient. Each batch item is forwarded and backpropagated once.
inline BatchLoss batch_triplet_loss(const EmbeddingModel& model,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& labels, double alpha,
                                    bool hard_fallback) {
  BatchLoss out;
  out.grads = ParameterGradients::zeros_like(model);
  std::vector<ForwardTrace> traces;
  std::vector<Vector> emb;
  traces.reserve(inputs.size());
  for (const auto& x : inputs) {
    traces.push_back(forward(model, x));
    emb.push_back(traces.back().output);
  }
  const auto triplets = mine_semi_hard(emb, labels, alpha, hard_fallback);
  out.triplets = triplets.size();
  if (triplets.empty()) return out;

  const std::size_t e = model.output_dim();
  std::vector<Vector> grad_out(inputs.size(), Vector(e, 0.0));
  const double scale = 1.0 / static_cast<double>(triplets.size());
  double total = 0.0;
  for (const auto& t : triplets) {
    const Vector& fa = emb[t.anchor];
    const Vector& fp = emb[t.positive];
    const Vector& fn = emb[t.negative];
    const double l = triplet_loss(fa, fp, fn, alpha);
    total += l;
    if (l <= 0.0) continue;
    ++out.active;
    for (std::size_t k = 0; k < e; ++k) {
      grad_out[t.anchor][k] += scale * 2.0 * (fn[k] - fp[k]);
      grad_out[t.positive][k] += scale * -2.0 * (fa[k] - fp[k]);
      grad_out[t.negative][k] += scale * 2.0 * (fa[k] - fn[k]);
    }
  }
  out.mean_loss = total * scale;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    bool nonzero = false;
    for (double g : grad_out[i]) nonzero = nonzero || g != 0.0;
    if (nonzero) backpropagate(model, traces[i], grad_out[i], out.grads);
  }
  return out;
}

/// Adam with bias correction over all weights and biases.
class AdamOptimizer {
 public:
  AdamOptimizer(const EmbeddingModel& model, double lr, double beta1,
                double beta2, double eps)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(ParameterGradients::zeros_like(model)),
        v_(ParameterGradients::zeros_like(model)) {}

  void step(EmbeddingModel& model, const ParameterGradients& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](Vector& param, const Vector& grad, Vector& m, Vector& v) {
      for (std::size_t k = 0; k < param.size(); ++k) {
        m[k] = beta1_ * m[k] + (1.0 - beta1_) * grad[k];
        v[k] = beta2_ * v[k] + (1.0 - beta2_) * grad[k] * grad[k];
        const double mhat = m[k] / c1;
        const double vhat = v[k] / c2;
        param[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    };
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      update(layers[l].weights, g.layers[l].weights, m_.layers[l].weights,
             v_.layers[l].weights);
      update(layers[l].bias, g.layers[l].bias, m_.layers[l].bias,
             v_.layers[l].bias);
    }
  }

  long steps() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  ParameterGradients m_, v_;
};

namespace detail {

inline std::vector<std::size_t> sample_views(const std::vector<std::size_t>& pool,
                                            std::size_t count,
                                            std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  if (pool.size() >= count) {
    std::vector<std::size_t> tmp = pool;
    for (std::size_t k = 0; k < count; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, tmp.size() - 1);
      std::swap(tmp[k], tmp[pick(rng)]);
      out.push_back(tmp[k]);
    }
  } else {
    // Too few views: sample with replacement.
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = 0; k < count; ++k) out.push_back(pool[pick(rng)]);
  }
  return out;
}

}  // namespace detail

/// Mean hinge loss over every (anchor, positive, negative) combination of
/// the dataset, without augmentation. Used to compare models before and
/// after training.
inline double dataset_loss(const EmbeddingModel& model,
                           const TripletDataset& dataset, double alpha) {
  std::vector<Vector> emb;
  for (const auto& it : dataset.items) emb.push_back(embed(model, it.descriptor));
  const std::size_t n = emb.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i * n + j] = dist[j * n + i] = squared_distance(emb[i], emb[j]);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || dataset.items[p].label != dataset.items[a].label) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (dataset.items[k].label == dataset.items[a].label) continue;
        total += std::max(0.0, dist[a * n + p] - dist[a * n + k] + alpha);
        ++count;
      }
    }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

/// Trains `model` on `dataset`. Each batch draws
/// ceil(batch_size / views_per_label) labels and views_per_label views per
/// label. Deterministic for a given seed.
inline TrainResult train(EmbeddingModel model, const TripletDataset& dataset,
                         const TrainConfig& config) {
  config.validate();
  model.validate();
  dataset.validate(model.input_dim());

  const auto groups = dataset.by_label();
  std::vector<int> label_list;
  for (const auto& [label, idx] : groups) label_list.push_back(label);

  const std::size_t vpl = static_cast<std::size_t>(config.views_per_label);
  const std::size_t labels_per_batch = std::min(
      label_list.size(),
      (static_cast<std::size_t>(config.batch_size) + vpl - 1) / vpl);
  const std::size_t batches_per_epoch = std::max<std::size_t>(
      1, (dataset.items.size() + static_cast<std::size_t>(config.batch_size) - 1) /
             static_cast<std::size_t>(config.batch_size));

  std::mt19937_64 rng(config.seed);
  AdamOptimizer adam(model, config.learning_rate, config.adam_beta1,
                     config.adam_beta2, config.adam_eps);
  TrainResult result;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t triplets = 0, active = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      std::vector<int> chosen = label_list;
      std::shuffle(chosen.begin(), chosen.end(), rng);
      chosen.resize(labels_per_batch);
      std::sort(chosen.begin(), chosen.end());

      std::vector<Vector> inputs;
      std::vector<int> labels;
      for (int label : chosen) {
        for (std::size_t idx : detail::sample_views(groups.at(label), vpl, rng)) {
          inputs.push_back(
              augment(dataset.items[idx].descriptor, config.augmentation, rng));
          labels.push_back(label);
        }
      }
      BatchLoss bl = batch_triplet_loss(model, inputs, labels, model.margin(),
                                        config.hard_fallback);
      if (!std::isfinite(bl.mean_loss))
        throw Error(ErrorKind::divergence,
                    "train: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += bl.mean_loss;
      triplets += bl.triplets;
      active += bl.active;
      if (bl.triplets > 0) adam.step(model, bl.grads);
    }
    EpochStats st;
    st.epoch = epoch;
    st.mean_loss = loss_sum / static_cast<double>(batches_per_epoch);
    st.active_triplet_fraction =
        triplets == 0 ? 0.0
                      : static_cast<double>(active) / static_cast<double>(triplets);
    if (!std::isfinite(st.mean_loss))
      throw Error(ErrorKind::divergence, "train: non-finite epoch loss");
    result.curve.push_back(st);
  }
  for (const auto& l : model.layers())
    if (!all_finite(l.weights) || !all_finite(l.bias))
      throw Error(ErrorKind::divergence, "train: non-finite weights");
  result.model = std::move(model);
  return result;
}

inline std::string loss_curve_csv(const std::vector<EpochStats>& curve) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,mean_loss,active_triplet_fraction\n";
  for (const auto& s : curve)
    os << s.epoch << ',' << s.mean_loss << ',' << s.active_triplet_fraction << '\n';
  return os.str();
}

// Model file ------------------------------------------------------------------

inline nlohmann::json model_to_json(const EmbeddingModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers()) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t o = 0; o < l.outputs; ++o)
      rows.push_back(Vector(l.weights.begin() + static_cast<std::ptrdiff_t>(o * l.inputs),
                            l.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * l.inputs)));
    layers.push_back({{"weights", rows}, {"bias", l.bias}});
  }
  return {{"format", "react-embedding-model"},
          {"version", 1},
          {"activation", "tanh"},
          {"layer_dims", m.layer_dims()},
          {"normalize_output", m.normalize_output()},
          {"margin", m.margin()},
          {"layers", layers}};
}

inline EmbeddingModel model_from_json(const nlohmann::json& j) {
  try {
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& jl = j.at("layers");
    if (dims.size() < 2 || jl.size() + 1 != dims.size())
      throw Error(ErrorKind::validation,
                  "model file: layers do not match layer_dims");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < jl.size(); ++l) {
      DenseLayer d;
      d.inputs = dims[l];
      d.outputs = dims[l + 1];
      const auto rows = jl[l].at("weights").get<std::vector<Vector>>();
      if (rows.size() != d.outputs)
        throw Error(ErrorKind::validation,
                    "model file: layer " + std::to_string(l) + " row count");
      for (const auto& r : rows) {
        if (r.size() != d.inputs)
          throw Error(ErrorKind::validation,
                      "model file: layer " + std::to_string(l) + " column count");
        d.weights.insert(d.weights.end(), r.begin(), r.end());
      }
      d.bias = jl[l].at("bias").get<Vector>();
      layers.push_back(std::move(d));
    }
    return EmbeddingModel::from_layers(std::move(layers),
                                       j.at("normalize_output").get<bool>(),
                                       j.at("margin").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("model file: ") + e.what());
  }
}

inline EmbeddingModel load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, path + ": " + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const std::string& path, const EmbeddingModel& m) {
  write_text_file(path, model_to_json(m).dump(1) + "\n");
}

}  // namespace react
