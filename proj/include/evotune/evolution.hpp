// Aging-evolution primitives: bounded FIFO population, tournament sampling
// and single-point mutation.
#pragma once

#include <deque>
#include <numeric>
#include <vector>

#include "evotune/common.hpp"
#include "evotune/space.hpp"

namespace evotune {

// One completed evaluation. Records are immutable after creation and may be
// shared read-only across threads.
struct EvaluationRecord {
  std::int64_t job_id = -1;
  ArchConfig arch;
  HPConfig hp;
  double objective = 0.0;  // validation accuracy, in [0, 1]; 0 when failed
  EvalStatus status = EvalStatus::Ok;
  double submit_time = 0.0;  // seconds since run start
  double finish_time = 0.0;
  double train_time = 0.0;
  int worker_id = -1;
  bool hp_clamped = false;  // process count was capped at the executor's limit
};

inline void validate(const EvaluationRecord& rec) {
  if (!(rec.objective >= 0.0 && rec.objective <= 1.0)) {
    throw InvalidInputError("objective must lie in [0, 1]");
  }
  if (rec.finish_time < rec.submit_time) {
    throw InvalidInputError("finish_time precedes submit_time");
  }
  if (rec.status == EvalStatus::Failed && rec.objective != 0.0) {
    throw InvalidInputError("failed records must carry objective 0");
  }
}

// Bounded FIFO queue of evaluation records; pushing beyond capacity evicts
// the single oldest entry.
class Population {
 public:
  explicit Population(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidInputError("population capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() == capacity_; }

  const std::deque<EvaluationRecord>& entries() const { return entries_; }

  void push(EvaluationRecord rec) {
    validate(rec);
    entries_.push_back(std::move(rec));
    if (entries_.size() > capacity_) entries_.pop_front();
  }

  // Uniform sample of `count` records without replacement.
  std::vector<EvaluationRecord> sample(std::size_t count, Rng& rng) const {
    if (count < 1 || count > entries_.size()) {
      throw InsufficientPopulationError("cannot sample " + std::to_string(count) +
                                        " from population of " +
                                        std::to_string(entries_.size()));
    }
    std::vector<std::size_t> idx(entries_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<EvaluationRecord> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
      std::swap(idx[i], idx[dist(rng)]);
      out.push_back(entries_[idx[i]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<EvaluationRecord> entries_;
};

// Best-of-sample tournament winner; ties break by earliest sample position.
inline const EvaluationRecord& select_parent(const std::vector<EvaluationRecord>& sample) {
  if (sample.empty()) throw EmptyInputError("select_parent on empty sample");
  const EvaluationRecord* best = &sample.front();
  for (const auto& rec : sample) {
    if (rec.objective > best->objective) best = &rec;
  }
  return *best;
}

// Single-point mutation: one uniformly chosen decision position gets a new
// value drawn uniformly from its domain minus the current value. Every
// decision position (variable or skip) is eligible.
inline ArchConfig mutate(const ArchConfig& parent, const ArchSpace& space, Rng& rng) {
  space.validate(parent);
  ArchConfig child = parent;
  std::uniform_int_distribution<std::size_t> pos_dist(0, child.decisions.size() - 1);
  std::size_t pos = pos_dist(rng);
  int domain = space.domain_size(pos);
  std::uniform_int_distribution<int> value_dist(0, domain - 2);
  int value = value_dist(rng);
  if (value >= child.decisions[pos]) ++value;  // skip over the current value
  child.decisions[pos] = value;
  return child;
}

}  // namespace evotune
