// Asynchronous Bayesian optimizer over the hyperparameter space: UCB
// acquisition maximised over sampled candidates, with constant-liar batch
// generation between tells.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "evotune/common.hpp"
#include "evotune/space.hpp"
#include "evotune/surrogate.hpp"

namespace evotune {

struct BOOptions {
  double kappa = 0.001;    // exploration weight in mu + kappa * sigma
  int n_initial = 10;      // observations before asks become model-based
  int n_candidates = 10000;
  TreeEnsembleOptions forest{};
  std::uint64_t seed = 0;
  bool keep_trace = false;  // retain scored candidate sets of the last ask
};

struct AcquisitionScore {
  HPConfig config;
  double mu = 0.0;
  double sigma = 0.0;
  double score = 0.0;
};

inline double ucb(double mu, double sigma, double kappa) { return mu + kappa * sigma; }

// Index of the best-scoring candidate; ties break by candidate order.
inline std::size_t pick_best(const std::vector<AcquisitionScore>& scored) {
  if (scored.empty()) throw EmptyInputError("pick_best on empty candidate set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].score > scored[best].score) best = i;
  }
  return best;
}

class BayesianOptimizer {
 public:
  explicit BayesianOptimizer(HPSpace space, BOOptions options = {})
      : space_(std::move(space)),
        options_(options),
        surrogate_(make_forest(options)),
        rng_(options.seed) {
    if (options_.kappa < 0.0) throw InvalidInputError("kappa must be >= 0");
    if (options_.n_initial < 1) throw InvalidInputError("n_initial must be >= 1");
    if (options_.n_candidates < 1) throw InvalidInputError("n_candidates must be >= 1");
  }

  const HPSpace& space() const { return space_; }
  const BOOptions& options() const { return options_; }
  std::size_t num_observed() const { return observed_.size(); }
  std::size_t num_lies() const { return lies_.size(); }

  // Scored candidate sets of the most recent ask, one per selection round.
  // Populated only when keep_trace is set.
  const std::vector<std::vector<AcquisitionScore>>& last_ask_trace() const { return trace_; }

  void tell(const std::vector<HPConfig>& configs, const std::vector<double>& objectives) {
    if (configs.size() != objectives.size()) {
      throw InvalidInputError("configs and objectives lengths differ");
    }
    if (configs.empty()) throw InvalidInputError("tell requires at least one pair");
    for (double v : objectives) {
      if (!std::isfinite(v)) throw InvalidDataError("non-finite objective");
    }
    for (std::size_t i = 0; i < configs.size(); ++i) {
      space_.validate(configs[i]);
      observed_.emplace_back(configs[i], objectives[i]);
    }
    lies_.clear();
    if (observed_.size() >= static_cast<std::size_t>(options_.n_initial)) refit();
  }

  // Constant lie: mean of all observed objectives.
  double lie_value() const {
    if (observed_.empty()) throw NoDataError("lie_value with no observations");
    double sum = std::accumulate(observed_.begin(), observed_.end(), 0.0,
                                 [](double acc, const auto& p) { return acc + p.second; });
    return sum / static_cast<double>(observed_.size());
  }

  std::vector<HPConfig> ask(int q) {
    if (q < 1) throw InvalidInputError("ask requires q >= 1");
    trace_.clear();

    std::vector<HPConfig> out;
    out.reserve(static_cast<std::size_t>(q));
    bool model_based = observed_.size() >= static_cast<std::size_t>(options_.n_initial);
    for (int round = 0; round < q; ++round) {
      HPConfig selected;
      if (!model_based) {
        selected = space_.random_hp(rng_);
      } else {
        auto scored = score_candidates(sample_candidates());
        selected = scored[pick_best(scored)].config;
        if (options_.keep_trace) trace_.push_back(std::move(scored));
      }
      out.push_back(selected);
      if (!observed_.empty()) {
        lies_.emplace_back(selected, lie_value());
        if (model_based) refit();
      }
    }
    return out;
  }

  std::vector<AcquisitionScore> score_candidates(const std::vector<HPConfig>& candidates) const {
    std::vector<AcquisitionScore> scored;
    scored.reserve(candidates.size());
    for (const auto& cfg : candidates) {
      auto pred = surrogate_.predict_one(space_.encode(cfg));
      scored.push_back({cfg, pred.mu, pred.sigma, ucb(pred.mu, pred.sigma, options_.kappa)});
    }
    return scored;
  }

 private:
  static TreeEnsembleRegressor make_forest(const BOOptions& options) {
    TreeEnsembleOptions forest = options.forest;
    forest.seed = options.seed ^ 0xd1342543de82ef95ULL;
    return TreeEnsembleRegressor(forest);
  }

  std::vector<HPConfig> sample_candidates() {
    std::vector<HPConfig> candidates(static_cast<std::size_t>(options_.n_candidates));
    for (auto& cfg : candidates) cfg = space_.random_hp(rng_);
    return candidates;
  }

  // Full refit on observed plus current lies.
  void refit() {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    X.reserve(observed_.size() + lies_.size());
    y.reserve(observed_.size() + lies_.size());
    for (const auto& [cfg, value] : observed_) {
      X.push_back(space_.encode(cfg));
      y.push_back(value);
    }
    for (const auto& [cfg, value] : lies_) {
      X.push_back(space_.encode(cfg));
      y.push_back(value);
    }
    surrogate_.fit(X, y);
  }

  HPSpace space_;
  BOOptions options_;
  std::vector<std::pair<HPConfig, double>> observed_;
  std::vector<std::pair<HPConfig, double>> lies_;
  TreeEnsembleRegressor surrogate_;
  Rng rng_;
  std::vector<std::vector<AcquisitionScore>> trace_;
};

}  // namespace evotune
