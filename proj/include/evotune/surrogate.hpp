// Tree-ensemble regressor: bagged variance-reduction regression trees giving
// a per-point mean and spread for the acquisition function.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "evotune/common.hpp"

namespace evotune {

struct TreeEnsembleOptions {
  int n_trees = 100;
  int min_samples_leaf = 3;
  double max_features = 1.0;  // fraction of dimensions tried per split
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

namespace detail {

// CART regression tree with squared-error splits, stored as a flat node array.
class RegressionTree {
 public:
  void fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
           const std::vector<std::size_t>& indices, int min_samples_leaf,
           double max_features, Rng& rng) {
    nodes_.clear();
    dims_ = X.empty() ? 0 : X.front().size();
    min_leaf_ = min_samples_leaf;
    n_features_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(max_features * static_cast<double>(dims_))));
    n_features_ = std::min(n_features_, dims_);
    std::vector<std::size_t> work = indices;
    grow(X, y, work, 0, work.size(), rng);
  }

  double predict(std::span<const double> x) const {
    std::size_t node = 0;
    while (!nodes_[node].leaf()) {
      node = x[static_cast<std::size_t>(nodes_[node].feature)] <= nodes_[node].threshold
                 ? nodes_[node].left
                 : nodes_[node].right;
    }
    return nodes_[node].value;
  }

 private:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    double value = 0.0;

    bool leaf() const { return feature < 0; }
  };

  // Grows the subtree over work[begin, end) and returns its root index.
  std::size_t grow(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                   std::vector<std::size_t>& work, std::size_t begin, std::size_t end,
                   Rng& rng) {
    std::size_t node_index = nodes_.size();
    nodes_.emplace_back();

    std::size_t count = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y[work[i]];
    double mean = sum / static_cast<double>(count);
    nodes_[node_index].value = mean;

    double sse = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      double d = y[work[i]] - mean;
      sse += d * d;
    }
    if (count < 2 * static_cast<std::size_t>(min_leaf_) || sse <= 1e-24) return node_index;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = sse;
    for (std::size_t f : feature_subset(rng)) {
      scan_feature(X, y, work, begin, end, f, sum, best_feature, best_threshold, best_score);
    }
    if (best_feature < 0) return node_index;

    auto mid = std::partition(work.begin() + static_cast<std::ptrdiff_t>(begin),
                              work.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::size_t i) {
                                return X[i][static_cast<std::size_t>(best_feature)] <=
                                       best_threshold;
                              });
    std::size_t split = static_cast<std::size_t>(mid - work.begin());

    nodes_[node_index].feature = best_feature;
    nodes_[node_index].threshold = best_threshold;
    std::size_t left = grow(X, y, work, begin, split, rng);
    std::size_t right = grow(X, y, work, split, end, rng);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
  }

  // Considers all valid thresholds of feature f, updating the incumbent best
  // split. Candidate thresholds are midpoints between consecutive distinct
  // sorted values; both children must hold at least min_samples_leaf samples.
  void scan_feature(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                    const std::vector<std::size_t>& work, std::size_t begin, std::size_t end,
                    std::size_t f, double total_sum, int& best_feature,
                    double& best_threshold, double& best_score) const {
    std::size_t count = end - begin;
    sorted_.assign(work.begin() + static_cast<std::ptrdiff_t>(begin),
                   work.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(sorted_.begin(), sorted_.end(),
              [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });

    double left_sum = 0.0, left_sq = 0.0;
    double total_sq = 0.0;
    for (std::size_t i : sorted_) total_sq += y[i] * y[i];

    for (std::size_t k = 0; k + 1 < count; ++k) {
      double yi = y[sorted_[k]];
      left_sum += yi;
      left_sq += yi * yi;
      double xa = X[sorted_[k]][f];
      double xb = X[sorted_[k + 1]][f];
      if (xa == xb) continue;
      std::size_t n_left = k + 1;
      std::size_t n_right = count - n_left;
      if (n_left < static_cast<std::size_t>(min_leaf_) ||
          n_right < static_cast<std::size_t>(min_leaf_)) {
        continue;
      }
      double right_sum = total_sum - left_sum;
      double right_sq = total_sq - left_sq;
      double score = (left_sq - left_sum * left_sum / static_cast<double>(n_left)) +
                     (right_sq - right_sum * right_sum / static_cast<double>(n_right));
      if (score < best_score - 1e-15) {
        best_score = score;
        best_feature = static_cast<int>(f);
        best_threshold = xa + (xb - xa) / 2.0;
      }
    }
  }

  std::vector<std::size_t> feature_subset(Rng& rng) const {
    std::vector<std::size_t> features(dims_);
    std::iota(features.begin(), features.end(), 0);
    if (n_features_ == dims_) return features;
    for (std::size_t i = 0; i < n_features_; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, features.size() - 1);
      std::swap(features[i], features[dist(rng)]);
    }
    features.resize(n_features_);
    std::sort(features.begin(), features.end());
    return features;
  }

  std::vector<Node> nodes_;
  std::size_t dims_ = 0;
  std::size_t n_features_ = 0;
  int min_leaf_ = 1;
  mutable std::vector<std::size_t> sorted_;
};

}  // namespace detail

// Bagged ensemble of regression trees. predict() reports the per-tree mean
// and the population standard deviation across trees.
class TreeEnsembleRegressor {
 public:
  struct Prediction {
    double mu = 0.0;
    double sigma = 0.0;
  };

  explicit TreeEnsembleRegressor(TreeEnsembleOptions options = {}) : options_(options) {
    if (options_.n_trees < 1) throw InvalidInputError("need at least one tree");
    if (options_.min_samples_leaf < 1) throw InvalidInputError("min_samples_leaf must be >= 1");
    if (!(options_.max_features > 0.0 && options_.max_features <= 1.0)) {
      throw InvalidInputError("max_features must lie in (0, 1]");
    }
  }

  const TreeEnsembleOptions& options() const { return options_; }
  bool fitted() const { return fitted_; }

  void fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
    if (X.empty() || y.empty()) throw EmptyInputError("fit called with no data");
    if (X.size() != y.size()) throw InvalidInputError("X and y sizes differ");
    for (double v : y) {
      if (!std::isfinite(v)) throw InvalidDataError("non-finite training target");
    }

    trees_.assign(static_cast<std::size_t>(options_.n_trees), {});
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      Rng rng(options_.seed + 0x9e3779b97f4a7c15ULL * (t + 1));
      std::vector<std::size_t> indices;
      indices.reserve(X.size());
      if (options_.bootstrap) {
        std::uniform_int_distribution<std::size_t> dist(0, X.size() - 1);
        for (std::size_t i = 0; i < X.size(); ++i) indices.push_back(dist(rng));
      } else {
        indices.resize(X.size());
        std::iota(indices.begin(), indices.end(), 0);
      }
      trees_[t].fit(X, y, indices, options_.min_samples_leaf, options_.max_features, rng);
    }
    fitted_ = true;
  }

  // Mean and population standard deviation of the per-tree predictions,
  // computed around a provisional value so agreeing trees give exact results.
  Prediction predict_one(std::span<const double> x) const {
    if (!fitted_) throw NotFittedError("predict before fit");
    std::vector<double> values;
    values.reserve(trees_.size());
    for (const auto& tree : trees_) values.push_back(tree.predict(x));

    double shift = 0.0;
    for (double v : values) shift += v - values.front();
    double mu = values.front() + shift / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mu) * (v - mu);
    var /= static_cast<double>(values.size());
    return {mu, std::sqrt(var)};
  }

  std::vector<Prediction> predict(const std::vector<std::vector<double>>& X) const {
    std::vector<Prediction> out;
    out.reserve(X.size());
    for (const auto& x : X) out.push_back(predict_one(x));
    return out;
  }

 private:
  TreeEnsembleOptions options_;
  std::vector<detail::RegressionTree> trees_;
  bool fitted_ = false;
};

}  // namespace evotune
