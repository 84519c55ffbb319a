// Dense-network trainer: Adam with linear learning-rate warmup to the scaled
// rate, plateau decay, and per-step gradient averaging over data shards.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "evotune/common.hpp"
#include "evotune/model.hpp"

namespace evotune {

struct TrainConfig {
  double lr1 = 0.01;
  int bs1 = 256;
  int n_shards = 1;
  int epochs = 20;
  int warmup_epochs = 5;
  int plateau_patience = 5;
  double plateau_factor = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int step_limit = 0;           // stop after this many optimizer steps (0 = off; debugging)
  bool parallel_shards = false;  // one thread per shard within a step

  void validate() const {
    if (bs1 < 1) throw InvalidConfigError("base batch size must be >= 1");
    if (n_shards < 1) throw InvalidConfigError("shard count must be >= 1");
    if (warmup_epochs < 0 || epochs < warmup_epochs) {
      throw InvalidConfigError("need epochs >= warmup_epochs >= 0");
    }
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
      throw InvalidConfigError("plateau factor must lie in (0, 1)");
    }
  }
};

// Linear scaling rule: lr and batch size grow with the shard count.
inline std::pair<double, int> scaled_hp(const TrainConfig& cfg) {
  return {static_cast<double>(cfg.n_shards) * cfg.lr1, cfg.n_shards * cfg.bs1};
}

struct EpochStats {
  double train_loss = 0.0;
  double valid_accuracy = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  double valid_accuracy = 0.0;  // objective: accuracy at the final epoch
  std::vector<EpochStats> history;
  double wall_time = 0.0;
  EvalStatus status = EvalStatus::Ok;
};

// Borrowed views of a prepared train/valid split.
template <typename Scalar = double>
struct DatasetView {
  Eigen::Ref<const MatrixT<Scalar>> x_train;
  Eigen::Ref<const Eigen::VectorXi> y_train;
  Eigen::Ref<const MatrixT<Scalar>> x_valid;
  Eigen::Ref<const Eigen::VectorXi> y_valid;
};

template <typename Scalar>
struct AdamState {
  std::vector<MatrixT<Scalar>> m;
  std::vector<MatrixT<Scalar>> v;
  long t = 0;

  explicit AdamState(const NetworkPlan<Scalar>& plan)
      : m(plan.zero_gradients()), v(plan.zero_gradients()) {}
};

template <typename Scalar>
void adam_step(NetworkPlan<Scalar>& plan, const std::vector<MatrixT<Scalar>>& grads,
               AdamState<Scalar>& state, double lr, const TrainConfig& cfg) {
  ++state.t;
  Scalar b1 = static_cast<Scalar>(cfg.adam_beta1);
  Scalar b2 = static_cast<Scalar>(cfg.adam_beta2);
  Scalar bc1 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.adam_beta1, state.t));
  Scalar bc2 = Scalar(1) - static_cast<Scalar>(std::pow(cfg.adam_beta2, state.t));
  for (std::size_t i = 0; i < plan.params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (Scalar(1) - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (Scalar(1) - b2) * grads[i].cwiseProduct(grads[i]);
    plan.params[i].array() -=
        static_cast<Scalar>(lr) * (state.m[i].array() / bc1) /
        ((state.v[i].array() / bc2).sqrt() + static_cast<Scalar>(cfg.adam_eps));
  }
}

namespace detail {

// Learning rate for 1-based epoch e: linear ramp from lr1 to lr_n over the
// warmup window (exact at its end), then lr_n, times the plateau scale.
inline double epoch_lr(const TrainConfig& cfg, int epoch, double plateau_scale) {
  auto [lr_n, bs_n] = scaled_hp(cfg);
  double base = lr_n;
  if (epoch < cfg.warmup_epochs) {
    base = cfg.lr1 + (lr_n - cfg.lr1) * static_cast<double>(epoch) /
                         static_cast<double>(cfg.warmup_epochs);
  }
  return base * plateau_scale;
}

}  // namespace detail

// Trains the plan in place. The training rows are split once into n_shards
// round-robin shards of a seeded permutation; each optimizer step averages
// the shard gradients (each over a bs1-row mini-batch) and applies a single
// Adam update, so the effective batch is n_shards * bs1.
template <typename Scalar>
TrainResult train(NetworkPlan<Scalar>& plan, const DatasetView<Scalar>& data,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.x_train.rows() == 0) throw InvalidDataError("empty training set");
  if (data.x_train.rows() != data.y_train.size() ||
      data.x_valid.rows() != data.y_valid.size()) {
    throw InvalidDataError("feature/label row counts differ");
  }

  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Rng rng(cfg.seed);
  glorot_init(plan, rng);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(data.x_train.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
    std::uniform_int_distribution<std::size_t> dist(i, perm.size() - 1);
    std::swap(perm[i], perm[dist(rng)]);
  }
  std::vector<std::vector<Eigen::Index>> shards(static_cast<std::size_t>(cfg.n_shards));
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shards[i % static_cast<std::size_t>(cfg.n_shards)].push_back(perm[i]);
  }

  std::size_t max_shard = 0;
  for (const auto& shard : shards) max_shard = std::max(max_shard, shard.size());
  std::size_t steps_per_epoch =
      (max_shard + static_cast<std::size_t>(cfg.bs1) - 1) / static_cast<std::size_t>(cfg.bs1);

  auto gather = [&](const std::vector<Eigen::Index>& rows, std::size_t from, std::size_t to,
                    MatrixT<Scalar>& x, Eigen::VectorXi& y) {
    x.resize(static_cast<Eigen::Index>(to - from), data.x_train.cols());
    y.resize(static_cast<Eigen::Index>(to - from));
    for (std::size_t i = from; i < to; ++i) {
      x.row(static_cast<Eigen::Index>(i - from)) = data.x_train.row(rows[i]);
      y[static_cast<Eigen::Index>(i - from)] = data.y_train[rows[i]];
    }
  };

  TrainResult result;
  AdamState<Scalar> adam(plan);
  double plateau_scale = 1.0;
  double best_accuracy = -1.0;
  int stale_epochs = 0;
  long steps_done = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double lr = detail::epoch_lr(cfg, epoch, plateau_scale);
    double loss_sum = 0.0;
    long loss_count = 0;

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::vector<MatrixT<Scalar>>> shard_grads(shards.size());
      std::vector<Scalar> shard_loss(shards.size(), Scalar(0));
      std::vector<char> contributed(shards.size(), 0);

      auto shard_work = [&](std::size_t s) {
        std::size_t from = step * static_cast<std::size_t>(cfg.bs1);
        std::size_t to =
            std::min(shards[s].size(), from + static_cast<std::size_t>(cfg.bs1));
        if (from >= to) return;
        MatrixT<Scalar> x;
        Eigen::VectorXi y;
        gather(shards[s], from, to, x, y);
        shard_loss[s] = loss_and_grad(plan, x, y, shard_grads[s]);
        contributed[s] = 1;
      };

      if (cfg.parallel_shards && shards.size() > 1) {
        std::vector<std::thread> threads;
        threads.reserve(shards.size());
        for (std::size_t s = 0; s < shards.size(); ++s) {
          threads.emplace_back(shard_work, s);
        }
        for (auto& t : threads) t.join();
      } else {
        for (std::size_t s = 0; s < shards.size(); ++s) shard_work(s);
      }

      std::vector<MatrixT<Scalar>> grads = plan.zero_gradients();
      Scalar loss = Scalar(0);
      int parts = 0;
      for (std::size_t s = 0; s < shards.size(); ++s) {
        if (!contributed[s]) continue;
        for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += shard_grads[s][i];
        loss += shard_loss[s];
        ++parts;
      }
      for (auto& g : grads) g /= static_cast<Scalar>(parts);
      loss /= static_cast<Scalar>(parts);

      if (!std::isfinite(static_cast<double>(loss))) {
        result.status = EvalStatus::Failed;
        result.valid_accuracy = 0.0;
        result.wall_time = elapsed();
        return result;
      }

      adam_step(plan, grads, adam, lr, cfg);
      loss_sum += static_cast<double>(loss);
      ++loss_count;
      ++steps_done;
      if (cfg.step_limit > 0 && steps_done >= cfg.step_limit) {
        result.wall_time = elapsed();
        return result;
      }
    }

    double valid_acc = accuracy(plan, data.x_valid, data.y_valid);
    result.history.push_back(
        {loss_sum / static_cast<double>(std::max(1L, loss_count)), valid_acc, lr});

    if (valid_acc > best_accuracy) {
      best_accuracy = valid_acc;
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.plateau_patience) {
      plateau_scale *= cfg.plateau_factor;
      stale_epochs = 0;
    }
  }

  result.valid_accuracy = result.history.empty() ? 0.0 : result.history.back().valid_accuracy;
  result.wall_time = elapsed();
  return result;
}

}  // namespace evotune
