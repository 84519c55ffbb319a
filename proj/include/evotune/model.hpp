// Materializes an architecture config into a trainable dense network with
// projected skip connections and a softmax head, with analytic gradients.
#pragma once

#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "evotune/common.hpp"
#include "evotune/space.hpp"

namespace evotune {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Read-only batch argument: binds matrices and views alike, with Scalar
// pinned by the plan rather than deduced from the argument.
template <typename Scalar>
using BatchRef = Eigen::Ref<const MatrixT<std::type_identity_t<Scalar>>>;
using LabelsRef = Eigen::Ref<const Eigen::VectorXi>;

template <typename Scalar>
Scalar sigmoid_scalar(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar activate_scalar(Activation act, Scalar x) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::Swish: return x * sigmoid_scalar(x);
    case Activation::Relu: return x > Scalar(0) ? x : Scalar(0);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return sigmoid_scalar(x);
  }
  return x;
}

// Derivative of the activation at pre-activation x.
template <typename Scalar>
Scalar activate_grad_scalar(Activation act, Scalar x) {
  switch (act) {
    case Activation::Identity: return Scalar(1);
    case Activation::Swish: {
      Scalar s = sigmoid_scalar(x);
      return s * (Scalar(1) + x * (Scalar(1) - s));
    }
    case Activation::Relu: return x > Scalar(0) ? Scalar(1) : Scalar(0);
    case Activation::Tanh: {
      Scalar t = std::tanh(x);
      return Scalar(1) - t * t;
    }
    case Activation::Sigmoid: {
      Scalar s = sigmoid_scalar(x);
      return s * (Scalar(1) - s);
    }
  }
  return Scalar(1);
}

// Trainable realization of one architecture config. Parameters are held as a
// flat list (biases as 1xN matrices) so optimizer state and gradients align
// by index.
template <typename Scalar = double>
struct NetworkPlan {
  struct Node {
    LayerChoice choice;
    int weight = -1;  // param indices; -1 for pass-through nodes
    int bias = -1;
  };
  // Active skip connection from node `source` into node `dest`. Every active
  // skip carries its own linear projection into the destination's input width.
  struct Skip {
    int source = 0;
    int dest = 0;
    int projection = -1;
  };

  int input_dim = 0;
  int output_dim = 0;
  std::vector<Node> nodes;      // variable nodes 1..m
  std::vector<Skip> skips;      // ordered by destination
  std::vector<int> widths;      // widths[d] = output width of node d, d in 0..m
  int output_weight = -1;
  int output_bias = -1;
  std::vector<MatrixT<Scalar>> params;

  std::size_t num_scalar_parameters() const {
    std::size_t total = 0;
    for (const auto& p : params) total += static_cast<std::size_t>(p.size());
    return total;
  }

  std::size_t num_projections() const { return skips.size(); }

  std::vector<MatrixT<Scalar>> zero_gradients() const {
    std::vector<MatrixT<Scalar>> grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.push_back(MatrixT<Scalar>::Zero(p.rows(), p.cols()));
    return grads;
  }
};

template <typename Scalar = double>
NetworkPlan<Scalar> build(const ArchConfig& arch, const ArchSpace& space) {
  space.validate(arch);

  NetworkPlan<Scalar> plan;
  plan.input_dim = space.input_dim();
  plan.output_dim = space.output_dim();
  int m = space.num_variable_nodes();
  plan.nodes.resize(static_cast<std::size_t>(m));
  plan.widths.assign(static_cast<std::size_t>(m) + 1, 0);
  plan.widths[0] = plan.input_dim;

  auto add_param = [&plan](int rows, int cols) {
    plan.params.emplace_back(MatrixT<Scalar>::Zero(rows, cols));
    return static_cast<int>(plan.params.size()) - 1;
  };

  const auto& layout = space.layout();
  std::vector<std::pair<int, int>> active_skips;  // (source, dest), layout order
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const DecisionSlot& slot = layout[i];
    if (slot.kind == NodeKind::Variable) {
      plan.nodes[static_cast<std::size_t>(slot.node - 1)].choice =
          LayerChoice{arch.decisions[i]};
    } else if (arch.decisions[i] == 1) {
      active_skips.emplace_back(slot.target, slot.node);
    }
  }

  for (int j = 1; j <= m; ++j) {
    auto& node = plan.nodes[static_cast<std::size_t>(j - 1)];
    if (node.choice.is_identity()) {
      plan.widths[static_cast<std::size_t>(j)] = plan.widths[static_cast<std::size_t>(j - 1)];
    } else {
      int units = node.choice.units();
      node.weight = add_param(plan.widths[static_cast<std::size_t>(j - 1)], units);
      node.bias = add_param(1, units);
      plan.widths[static_cast<std::size_t>(j)] = units;
    }
  }
  plan.output_weight = add_param(plan.widths[static_cast<std::size_t>(m)], plan.output_dim);
  plan.output_bias = add_param(1, plan.output_dim);

  for (auto [source, dest] : active_skips) {
    typename NetworkPlan<Scalar>::Skip skip;
    skip.source = source;
    skip.dest = dest;
    skip.projection = add_param(plan.widths[static_cast<std::size_t>(source)],
                                plan.widths[static_cast<std::size_t>(dest - 1)]);
    plan.skips.push_back(skip);
  }
  std::stable_sort(plan.skips.begin(), plan.skips.end(),
                   [](const auto& a, const auto& b) { return a.dest < b.dest; });
  return plan;
}

// Fan-based uniform initialization of all weight matrices; biases stay zero.
template <typename Scalar>
void glorot_init(NetworkPlan<Scalar>& plan, Rng& rng) {
  for (auto& p : plan.params) {
    if (p.rows() == 1) {
      p.setZero();
      continue;
    }
    double limit = std::sqrt(6.0 / static_cast<double>(p.rows() + p.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        p(r, c) = static_cast<Scalar>(dist(rng));
      }
    }
  }
}

namespace detail {

// Per-batch intermediate tensors kept for the backward pass.
template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixT<Scalar>> acts;      // node outputs, index 0..m
  std::vector<MatrixT<Scalar>> merged;    // layer inputs, index by dest 1..m+1
  std::vector<MatrixT<Scalar>> premerge;  // pre-ReLU skip sums where present
  std::vector<MatrixT<Scalar>> preact;    // dense pre-activations, per node
  MatrixT<Scalar> logits;
};

template <typename Scalar>
void forward_pass(const NetworkPlan<Scalar>& plan, const BatchRef<Scalar>& batch,
                  ForwardCache<Scalar>& cache) {
  if (batch.cols() != plan.input_dim) {
    throw InvalidInputError("batch has " + std::to_string(batch.cols()) +
                            " columns, expected " + std::to_string(plan.input_dim));
  }
  int m = static_cast<int>(plan.nodes.size());
  cache.acts.assign(static_cast<std::size_t>(m) + 1, {});
  cache.merged.assign(static_cast<std::size_t>(m) + 2, {});
  cache.premerge.assign(static_cast<std::size_t>(m) + 2, {});
  cache.preact.assign(static_cast<std::size_t>(m) + 1, {});
  cache.acts[0] = batch;

  std::size_t skip_cursor = 0;
  for (int d = 1; d <= m + 1; ++d) {
    MatrixT<Scalar> merged = cache.acts[static_cast<std::size_t>(d - 1)];
    bool has_skip = false;
    while (skip_cursor < plan.skips.size() && plan.skips[skip_cursor].dest == d) {
      const auto& skip = plan.skips[skip_cursor];
      merged.noalias() += cache.acts[static_cast<std::size_t>(skip.source)] *
                          plan.params[static_cast<std::size_t>(skip.projection)];
      has_skip = true;
      ++skip_cursor;
    }
    if (has_skip) {
      cache.premerge[static_cast<std::size_t>(d)] = merged;
      merged = merged.cwiseMax(Scalar(0));
    }
    cache.merged[static_cast<std::size_t>(d)] = merged;

    if (d <= m) {
      const auto& node = plan.nodes[static_cast<std::size_t>(d - 1)];
      if (node.choice.is_identity()) {
        cache.acts[static_cast<std::size_t>(d)] = std::move(merged);
      } else {
        MatrixT<Scalar> z = merged * plan.params[static_cast<std::size_t>(node.weight)];
        z.rowwise() += plan.params[static_cast<std::size_t>(node.bias)].row(0);
        Activation act = node.choice.activation();
        cache.preact[static_cast<std::size_t>(d)] = z;
        cache.acts[static_cast<std::size_t>(d)] =
            z.unaryExpr([act](Scalar v) { return activate_scalar(act, v); });
      }
    } else {
      cache.logits = merged * plan.params[static_cast<std::size_t>(plan.output_weight)];
      cache.logits.rowwise() +=
          plan.params[static_cast<std::size_t>(plan.output_bias)].row(0);
    }
  }
}

template <typename Scalar>
MatrixT<Scalar> softmax_rows(const MatrixT<Scalar>& logits) {
  MatrixT<Scalar> probs(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Scalar max = logits.row(r).maxCoeff();
    probs.row(r) = (logits.row(r).array() - max).exp();
    probs.row(r) /= probs.row(r).sum();
  }
  return probs;
}

}  // namespace detail

// Class probabilities for a batch; rows sum to one.
template <typename Scalar>
MatrixT<Scalar> forward(const NetworkPlan<Scalar>& plan, const BatchRef<Scalar>& batch) {
  detail::ForwardCache<Scalar> cache;
  detail::forward_pass(plan, batch, cache);
  return detail::softmax_rows(cache.logits);
}

// Mean softmax cross-entropy over the batch plus gradients aligned with
// plan.params. Returns a non-finite loss (rather than throwing) when the
// forward pass degenerates, so callers can mark the evaluation failed.
template <typename Scalar>
Scalar loss_and_grad(const NetworkPlan<Scalar>& plan, const BatchRef<Scalar>& batch,
                     const LabelsRef& labels, std::vector<MatrixT<Scalar>>& grads) {
  if (labels.size() != batch.rows()) {
    throw InvalidInputError("labels and batch row counts differ");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= plan.output_dim) {
      throw InvalidInputError("label out of range");
    }
  }

  detail::ForwardCache<Scalar> cache;
  detail::forward_pass(plan, batch, cache);
  int m = static_cast<int>(plan.nodes.size());
  Eigen::Index rows = batch.rows();

  Scalar loss = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    Scalar max = cache.logits.row(r).maxCoeff();
    Scalar lse = max + std::log((cache.logits.row(r).array() - max).exp().sum());
    loss += lse - cache.logits(r, labels[r]);
  }
  loss /= static_cast<Scalar>(rows);

  grads = plan.zero_gradients();
  MatrixT<Scalar> dlogits = detail::softmax_rows(cache.logits);
  for (Eigen::Index r = 0; r < rows; ++r) dlogits(r, labels[r]) -= Scalar(1);
  dlogits /= static_cast<Scalar>(rows);

  // Gradient accumulators for every node output.
  std::vector<MatrixT<Scalar>> dacts(static_cast<std::size_t>(m) + 1);
  for (int d = 0; d <= m; ++d) {
    dacts[static_cast<std::size_t>(d)] =
        MatrixT<Scalar>::Zero(rows, plan.widths[static_cast<std::size_t>(d)]);
  }

  auto backprop_merge = [&](int d, const MatrixT<Scalar>& grad_merged) {
    MatrixT<Scalar> grad = grad_merged;
    const auto& premerge = cache.premerge[static_cast<std::size_t>(d)];
    if (premerge.size() > 0) {
      grad = grad.cwiseProduct(
          premerge.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
      for (const auto& skip : plan.skips) {
        if (skip.dest != d) continue;
        grads[static_cast<std::size_t>(skip.projection)].noalias() +=
            cache.acts[static_cast<std::size_t>(skip.source)].transpose() * grad;
        dacts[static_cast<std::size_t>(skip.source)].noalias() +=
            grad * plan.params[static_cast<std::size_t>(skip.projection)].transpose();
      }
    }
    dacts[static_cast<std::size_t>(d - 1)].noalias() += grad;
  };

  // Output layer first, then variable nodes in reverse.
  grads[static_cast<std::size_t>(plan.output_weight)].noalias() =
      cache.merged[static_cast<std::size_t>(m + 1)].transpose() * dlogits;
  grads[static_cast<std::size_t>(plan.output_bias)].row(0) = dlogits.colwise().sum();
  backprop_merge(m + 1,
                 dlogits * plan.params[static_cast<std::size_t>(plan.output_weight)].transpose());

  for (int d = m; d >= 1; --d) {
    const auto& node = plan.nodes[static_cast<std::size_t>(d - 1)];
    if (node.choice.is_identity()) {
      backprop_merge(d, dacts[static_cast<std::size_t>(d)]);
    } else {
      Activation act = node.choice.activation();
      MatrixT<Scalar> dz = dacts[static_cast<std::size_t>(d)].cwiseProduct(
          cache.preact[static_cast<std::size_t>(d)].unaryExpr(
              [act](Scalar v) { return activate_grad_scalar(act, v); }));
      grads[static_cast<std::size_t>(node.weight)].noalias() =
          cache.merged[static_cast<std::size_t>(d)].transpose() * dz;
      grads[static_cast<std::size_t>(node.bias)].row(0) = dz.colwise().sum();
      backprop_merge(d, dz * plan.params[static_cast<std::size_t>(node.weight)].transpose());
    }
  }
  return loss;
}

// Fraction of rows whose argmax probability matches the label.
template <typename Scalar>
double accuracy(const NetworkPlan<Scalar>& plan, const BatchRef<Scalar>& batch,
                const LabelsRef& labels) {
  MatrixT<Scalar> probs = forward(plan, batch);
  Eigen::Index hits = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    probs.row(r).maxCoeff(&best);
    if (static_cast<int>(best) == labels[r]) ++hits;
  }
  return probs.rows() == 0 ? 0.0
                           : static_cast<double>(hits) / static_cast<double>(probs.rows());
}

}  // namespace evotune
