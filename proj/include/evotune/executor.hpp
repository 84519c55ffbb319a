// Nonblocking manager-worker evaluation service. Two implementations share
// one contract: a thread pool for real training jobs, and a virtual-clock
// pool that replays simulated durations deterministically.
#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "evotune/common.hpp"
#include "evotune/evolution.hpp"
#include "evotune/space.hpp"

namespace evotune {

struct Job {
  std::int64_t id = -1;
  ArchConfig arch;
  HPConfig hp;
  double submit_time = 0.0;
};

// What a backend reports for one finished job.
struct EvalOutcome {
  double objective = 0.0;
  EvalStatus status = EvalStatus::Ok;
  double train_time = 0.0;
  bool hp_clamped = false;
};

using EvalFn = std::function<EvalOutcome(const Job&)>;

class Executor {
 public:
  virtual ~Executor() = default;

  // Queues the job and returns immediately with its id.
  virtual std::int64_t submit(ArchConfig arch, HPConfig hp) = 0;

  // All results completed since the previous call, in completion order.
  // Never blocks awaiting completion.
  virtual std::vector<EvaluationRecord> get_finished() = 0;

  // drain=true completes everything submitted; drain=false marks jobs that
  // have not started as failed. Idempotent.
  virtual void shutdown(bool drain) = 0;

  virtual double now() const = 0;
  virtual int workers() const = 0;
};

// Fixed pool of worker threads fed from a FIFO queue; results cross back to
// the controller thread through a mutex-guarded completion queue.
class ThreadPoolExecutor : public Executor {
 public:
  ThreadPoolExecutor(int workers, EvalFn fn)
      : fn_(std::move(fn)), workers_count_(workers), start_(std::chrono::steady_clock::now()) {
    if (workers < 1) throw InvalidInputError("need at least one worker");
    threads_.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads_.emplace_back([this, w] { worker_loop(w); });
    }
  }

  ~ThreadPoolExecutor() override { shutdown(false); }

  std::int64_t submit(ArchConfig arch, HPConfig hp) override {
    std::lock_guard lock(mutex_);
    if (closed_) throw RejectedSubmissionError("executor is shut down");
    Job job{next_id_++, std::move(arch), std::move(hp), now()};
    queue_.push_back(std::move(job));
    work_available_.notify_one();
    return next_id_ - 1;
  }

  std::vector<EvaluationRecord> get_finished() override {
    std::lock_guard lock(mutex_);
    std::vector<EvaluationRecord> out(completed_.begin(), completed_.end());
    completed_.clear();
    return out;
  }

  void shutdown(bool drain) override {
    {
      std::unique_lock lock(mutex_);
      if (closed_ && threads_.empty()) return;
      closed_ = true;
      if (drain) {
        idle_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
      } else {
        for (auto& job : queue_) {
          EvaluationRecord rec;
          rec.job_id = job.id;
          rec.arch = std::move(job.arch);
          rec.hp = job.hp;
          rec.status = EvalStatus::Failed;
          rec.submit_time = job.submit_time;
          rec.finish_time = now();
          completed_.push_back(std::move(rec));
        }
        queue_.clear();
        idle_.wait(lock, [this] { return running_ == 0; });
      }
      stop_ = true;
      work_available_.notify_all();
    }
    for (auto& t : threads_) t.join();
    threads_.clear();
  }

  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  int workers() const override { return workers_count_; }

  int running_high_water() const { return high_water_.load(); }

  std::size_t queued_count() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

 private:
  void worker_loop(int worker_id) {
    for (;;) {
      Job job;
      {
        std::unique_lock lock(mutex_);
        work_available_.wait(lock, [this] { return stop_ || !queue_.empty(); });
        if (queue_.empty()) return;  // stop requested and nothing left
        job = std::move(queue_.front());
        queue_.pop_front();
        ++running_;
        int seen = running_;
        int prev = high_water_.load();
        while (seen > prev && !high_water_.compare_exchange_weak(prev, seen)) {
        }
      }

      EvaluationRecord rec;
      rec.job_id = job.id;
      rec.arch = job.arch;
      rec.hp = job.hp;
      rec.submit_time = job.submit_time;
      rec.worker_id = worker_id;
      try {
        EvalOutcome outcome = fn_(job);
        rec.objective = outcome.status == EvalStatus::Ok ? outcome.objective : 0.0;
        rec.status = outcome.status;
        rec.train_time = outcome.train_time;
        rec.hp_clamped = outcome.hp_clamped;
      } catch (const std::exception&) {
        rec.objective = 0.0;
        rec.status = EvalStatus::Failed;
      }
      rec.finish_time = now();

      {
        std::lock_guard lock(mutex_);
        completed_.push_back(std::move(rec));
        --running_;
        idle_.notify_all();
      }
    }
  }

  EvalFn fn_;
  int workers_count_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::thread> threads_;

  mutable std::mutex mutex_;
  std::condition_variable work_available_;
  std::condition_variable idle_;
  std::deque<Job> queue_;
  std::deque<EvaluationRecord> completed_;
  std::int64_t next_id_ = 0;
  int running_ = 0;
  std::atomic<int> high_water_{0};
  bool closed_ = false;
  bool stop_ = false;
};

// Pure evaluation double: a deterministic objective plus a simulated wall
// duration per configuration.
struct SimulatedBackend {
  std::function<double(const ArchConfig&, const HPConfig&)> objective;
  std::function<double(const ArchConfig&, const HPConfig&)> duration;
};

// Deterministic executor over a virtual clock. Jobs occupy the earliest-free
// of W slots; polling advances the clock to the next completion when nothing
// has finished yet, so a fixed seed replays the identical schedule.
class SimulatedExecutor : public Executor {
 public:
  SimulatedExecutor(int workers, SimulatedBackend backend)
      : backend_(std::move(backend)), free_at_(static_cast<std::size_t>(workers), 0.0) {
    if (workers < 1) throw InvalidInputError("need at least one worker");
  }

  std::int64_t submit(ArchConfig arch, HPConfig hp) override {
    if (closed_) throw RejectedSubmissionError("executor is shut down");
    PendingJob pending;
    pending.job = Job{next_id_++, std::move(arch), std::move(hp), now_};

    std::size_t slot = 0;
    for (std::size_t s = 1; s < free_at_.size(); ++s) {
      if (free_at_[s] < free_at_[slot]) slot = s;
    }
    pending.start = std::max(now_, free_at_[slot]);
    pending.finish = pending.start + backend_.duration(pending.job.arch, pending.job.hp);
    pending.worker = static_cast<int>(slot);
    free_at_[slot] = pending.finish;
    pending_.push_back(std::move(pending));
    return next_id_ - 1;
  }

  std::vector<EvaluationRecord> get_finished() override {
    if (!pending_.empty()) {
      double horizon = pending_.front().finish;
      for (const auto& p : pending_) horizon = std::min(horizon, p.finish);
      if (horizon > now_) now_ = horizon;  // poll "waits" in virtual time
    }
    return collect();
  }

  void shutdown(bool drain) override {
    if (closed_) return;
    closed_ = true;
    if (drain) {
      for (const auto& p : pending_) now_ = std::max(now_, p.finish);
    } else {
      const double cutoff = now_;  // jobs started by now keep running
      std::deque<PendingJob> keep;
      for (auto& p : pending_) {
        if (p.start <= cutoff) {
          now_ = std::max(now_, p.finish);
          keep.push_back(std::move(p));
          continue;
        }
        EvaluationRecord rec;
        rec.job_id = p.job.id;
        rec.arch = std::move(p.job.arch);
        rec.hp = p.job.hp;
        rec.status = EvalStatus::Failed;
        rec.submit_time = p.job.submit_time;
        rec.finish_time = cutoff;
        cancelled_.push_back(std::move(rec));
      }
      pending_ = std::move(keep);
    }
  }

  double now() const override { return now_; }
  int workers() const override { return static_cast<int>(free_at_.size()); }

  std::size_t in_flight() const { return pending_.size(); }

 private:
  struct PendingJob {
    Job job;
    double start = 0.0;
    double finish = 0.0;
    int worker = -1;
  };

  std::vector<EvaluationRecord> collect() {
    std::vector<PendingJob> done;
    std::deque<PendingJob> keep;
    for (auto& p : pending_) {
      if (p.finish <= now_) {
        done.push_back(std::move(p));
      } else {
        keep.push_back(std::move(p));
      }
    }
    pending_ = std::move(keep);
    std::sort(done.begin(), done.end(), [](const PendingJob& a, const PendingJob& b) {
      return a.finish != b.finish ? a.finish < b.finish : a.job.id < b.job.id;
    });

    std::vector<EvaluationRecord> out;
    out.reserve(done.size() + cancelled_.size());
    for (auto& p : done) {
      EvaluationRecord rec;
      rec.job_id = p.job.id;
      rec.arch = std::move(p.job.arch);
      rec.hp = p.job.hp;
      rec.objective = backend_.objective(rec.arch, rec.hp);
      rec.status = EvalStatus::Ok;
      rec.submit_time = p.job.submit_time;
      rec.finish_time = p.finish;
      rec.train_time = p.finish - p.start;
      rec.worker_id = p.worker;
      out.push_back(std::move(rec));
    }
    for (auto& rec : cancelled_) out.push_back(std::move(rec));
    cancelled_.clear();
    return out;
  }

  SimulatedBackend backend_;
  std::vector<double> free_at_;
  std::deque<PendingJob> pending_;
  std::vector<EvaluationRecord> cancelled_;
  double now_ = 0.0;
  std::int64_t next_id_ = 0;
  bool closed_ = false;
};

// Seeded decision-matching objective: variable nodes score when a
// non-identity layer hits the target unit count, skip nodes score on the
// exact bit. hp_weight > 0 blends in a process-count preference so the
// optimum requires tuning the hyperparameters as well.
inline SimulatedBackend make_arch_target(const ArchSpace& space, std::uint64_t seed,
                                         double hp_weight) {
  Rng rng(seed ^ 0xa02bdbf7bb3c0a7ULL);
  std::vector<int> target;
  target.reserve(static_cast<std::size_t>(space.num_decision_variables()));
  const auto layout = space.layout();
  std::uniform_int_distribution<int> units_dist(0, 5);
  std::uniform_int_distribution<int> bit_dist(0, 1);
  for (const auto& slot : layout) {
    target.push_back(slot.kind == NodeKind::Variable ? units_dist(rng) : bit_dist(rng));
  }

  auto arch_score = [layout, target](const ArchConfig& arch) {
    double points = 0.0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (layout[i].kind == NodeKind::Variable) {
        LayerChoice choice{arch.decisions[i]};
        if (!choice.is_identity() &&
            choice.units() == kLayerUnits[static_cast<std::size_t>(target[i])]) {
          points += 1.0;
        }
      } else if (arch.decisions[i] == target[i]) {
        points += 1.0;
      }
    }
    return points / static_cast<double>(layout.size());
  };

  SimulatedBackend backend;
  backend.objective = [arch_score, hp_weight](const ArchConfig& arch, const HPConfig& hp) {
    double score = (1.0 - hp_weight) * arch_score(arch);
    if (hp_weight > 0.0) {
      double n_score = 0.0;
      switch (hp.n) {
        case 1: n_score = 0.2; break;
        case 2: n_score = 0.5; break;
        case 4: n_score = 1.0; break;
        case 8: n_score = 0.7; break;
        default: n_score = 0.0; break;
      }
      score += hp_weight * n_score;
    }
    return score;
  };
  backend.duration = [](const ArchConfig&, const HPConfig&) { return 1.0; };
  return backend;
}

// Built-in simulated objectives, selectable by name. All of them ignore the
// continuous learning-rate dimension so their optima stay enumerable.
inline const std::map<std::string, std::function<SimulatedBackend(const ArchSpace&, std::uint64_t)>>&
simulated_objectives() {
  static const std::map<std::string,
                        std::function<SimulatedBackend(const ArchSpace&, std::uint64_t)>>
      registry = {
          {"constant",
           [](const ArchSpace&, std::uint64_t) {
             SimulatedBackend backend;
             backend.objective = [](const ArchConfig&, const HPConfig&) { return 0.5; };
             backend.duration = [](const ArchConfig&, const HPConfig&) { return 1.0; };
             return backend;
           }},
          {"arch-target",
           [](const ArchSpace& space, std::uint64_t seed) {
             return make_arch_target(space, seed, /*hp_weight=*/0.0);
           }},
          {"arch-target-hp",
           [](const ArchSpace& space, std::uint64_t seed) {
             return make_arch_target(space, seed, /*hp_weight=*/0.25);
           }},
      };
  return registry;
}

}  // namespace evotune
