// Main search loop: seed the pool with random joint configs, then keep
// replacing each finished evaluation with a mutated child (architecture) and
// an optimizer-suggested hyperparameter configuration.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "evotune/common.hpp"
#include "evotune/evolution.hpp"
#include "evotune/executor.hpp"
#include "evotune/optimizer.hpp"
#include "evotune/space.hpp"

namespace evotune {

enum class SearchMode { AgE, AgEN, AgEBO };

inline const char* to_string(SearchMode mode) {
  switch (mode) {
    case SearchMode::AgE: return "age";
    case SearchMode::AgEN: return "age-n";
    case SearchMode::AgEBO: return "agebo";
  }
  return "?";
}

struct SearchConfig {
  SearchMode mode = SearchMode::AgEBO;
  ArchSpace arch_space{10, 1, 1};
  HPSpace hp_space{};
  int population_size = 100;  // P
  int sample_size = 10;       // S
  int workers = 4;            // W
  double wall_time_limit = std::numeric_limits<double>::infinity();  // seconds
  std::int64_t max_evaluations = 0;  // 0 = unlimited
  HPConfig fixed_hp{0.01, 256, 1};   // AgE / AgE-n modes
  double kappa = 0.001;
  int n_initial = 10;
  int n_candidates = 10000;
  int surrogate_trees = 100;
  std::uint64_t seed = 0;
  double poll_interval = 0.1;  // controller sleep on an empty poll, seconds

  void validate() const {
    if (workers < 1) throw InvalidConfigError("need at least one worker");
    if (population_size < 1 || sample_size < 1 || sample_size > population_size) {
      throw InvalidConfigError("need 1 <= S <= P");
    }
    if (!std::isfinite(wall_time_limit) && max_evaluations <= 0) {
      throw InvalidConfigError("at least one stopping criterion must be bounded");
    }
    if (mode != SearchMode::AgEBO) hp_space.validate(fixed_hp);
  }
};

struct SearchState {
  Population population;
  std::optional<BayesianOptimizer> bo;
  std::vector<EvaluationRecord> history;  // append-only, completion order
};

// Record with the highest objective; ties break by earliest finish time.
inline const EvaluationRecord& best(const SearchState& state) {
  if (state.history.empty()) throw NoDataError("empty search history");
  const EvaluationRecord* best = &state.history.front();
  for (const auto& rec : state.history) {
    if (rec.objective > best->objective ||
        (rec.objective == best->objective && rec.finish_time < best->finish_time)) {
      best = &rec;
    }
  }
  return *best;
}

using RecordCallback = std::function<void(const EvaluationRecord&)>;

inline SearchState run(const SearchConfig& cfg, Executor& pool,
                       const RecordCallback& on_record = {}) {
  cfg.validate();

  SearchState state{Population(static_cast<std::size_t>(cfg.population_size)), {}, {}};
  if (cfg.mode == SearchMode::AgEBO) {
    BOOptions options;
    options.kappa = cfg.kappa;
    options.n_initial = cfg.n_initial;
    options.n_candidates = cfg.n_candidates;
    options.forest.n_trees = cfg.surrogate_trees;
    options.seed = cfg.seed + 1;
    state.bo.emplace(cfg.hp_space, options);
  }

  Rng rng(cfg.seed);
  auto stop_reached = [&] {
    if (pool.now() >= cfg.wall_time_limit) return true;
    return cfg.max_evaluations > 0 &&
           static_cast<std::int64_t>(state.history.size()) >= cfg.max_evaluations;
  };

  for (int i = 0; i < cfg.workers; ++i) {
    HPConfig hp = cfg.mode == SearchMode::AgEBO ? cfg.hp_space.random_hp(rng) : cfg.fixed_hp;
    pool.submit(cfg.arch_space.random_arch(rng), hp);
  }

  while (true) {
    std::vector<EvaluationRecord> results = pool.get_finished();
    if (results.empty()) {
      if (stop_reached()) break;
      if (cfg.poll_interval > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(cfg.poll_interval));
      }
      continue;
    }

    for (const auto& rec : results) {
      state.population.push(rec);
      state.history.push_back(rec);
      if (on_record) on_record(rec);
    }
    if (stop_reached()) break;

    std::vector<HPConfig> next_hps;
    if (cfg.mode == SearchMode::AgEBO) {
      std::vector<HPConfig> hps;
      std::vector<double> objectives;
      hps.reserve(results.size());
      objectives.reserve(results.size());
      for (const auto& rec : results) {
        hps.push_back(rec.hp);
        objectives.push_back(rec.objective);
      }
      state.bo->tell(hps, objectives);
      next_hps = state.bo->ask(static_cast<int>(results.size()));
    }

    for (std::size_t i = 0; i < results.size(); ++i) {
      ArchConfig child;
      if (state.population.full()) {
        auto sample = state.population.sample(static_cast<std::size_t>(cfg.sample_size), rng);
        child = mutate(select_parent(sample).arch, cfg.arch_space, rng);
      } else {
        child = cfg.arch_space.random_arch(rng);
      }
      HPConfig hp = cfg.mode == SearchMode::AgEBO ? next_hps[i] : cfg.fixed_hp;
      pool.submit(std::move(child), hp);
    }
  }

  // Timed out or hit the evaluation budget: let in-flight jobs finish and
  // record them, but submit nothing new.
  pool.shutdown(/*drain=*/true);
  for (auto& rec : pool.get_finished()) {
    state.history.push_back(rec);
    if (on_record) on_record(state.history.back());
  }
  return state;
}

}  // namespace evotune
