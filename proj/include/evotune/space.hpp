// Joint search space: categorical architecture decisions and the
// data-parallel training hyperparameters tuned alongside them.
#pragma once

#include <array>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "evotune/common.hpp"

namespace evotune {

using BigInt = boost::multiprecision::cpp_int;

enum class Activation { Identity, Swish, Relu, Tanh, Sigmoid };

inline const char* to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::Swish: return "swish";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline constexpr std::array<int, 6> kLayerUnits{16, 32, 48, 64, 80, 96};
inline constexpr std::array<Activation, 5> kLayerActivations{
    Activation::Identity, Activation::Swish, Activation::Relu,
    Activation::Tanh, Activation::Sigmoid};

// One categorical layer decision. Index 0 is the parameter-free pass-through;
// indices 1..30 enumerate (units, activation) pairs, units-major.
struct LayerChoice {
  int index = 0;

  static constexpr int count = 31;

  bool is_identity() const { return index == 0; }

  int units() const { return kLayerUnits[static_cast<std::size_t>((index - 1) / 5)]; }

  Activation activation() const {
    return kLayerActivations[static_cast<std::size_t>((index - 1) % 5)];
  }

  static LayerChoice from(int units, Activation act) {
    auto u = std::find(kLayerUnits.begin(), kLayerUnits.end(), units);
    auto a = std::find(kLayerActivations.begin(), kLayerActivations.end(), act);
    if (u == kLayerUnits.end() || a == kLayerActivations.end()) {
      throw InvalidConfigError("no such layer type: " + std::to_string(units) +
                               " units, " + to_string(act));
    }
    int ui = static_cast<int>(u - kLayerUnits.begin());
    int ai = static_cast<int>(a - kLayerActivations.begin());
    return LayerChoice{1 + ui * 5 + ai};
  }
};

enum class NodeKind { Variable, Skip };

// One position of the decision vector. `node` is the graph node the decision
// belongs to (variable nodes are 1..m, the output node is m+1, the input is
// node 0). For skip decisions `target` is the source node of the connection.
struct DecisionSlot {
  NodeKind kind;
  int node;
  int target;  // -1 for variable decisions
};

struct ArchConfig {
  std::vector<int> decisions;

  bool operator==(const ArchConfig&) const = default;
};

// Architecture space: m variable nodes in a chain, each preceded by up to
// three binary skip decisions reaching back to non-consecutive nodes, plus
// up to three skip decisions in front of the output node.
class ArchSpace {
 public:
  ArchSpace(int num_variable_nodes, int input_dim, int output_dim)
      : m_(num_variable_nodes), input_dim_(input_dim), output_dim_(output_dim) {
    if (m_ < 1) throw InvalidConfigError("need at least one variable node");
    if (input_dim_ < 1 || output_dim_ < 1) {
      throw InvalidConfigError("input/output dimensions must be positive");
    }
    for (int j = 1; j <= m_ + 1; ++j) {
      if (j <= m_) layout_.push_back({NodeKind::Variable, j, -1});
      // Skip decisions reach the three nearest non-consecutive predecessors,
      // nearest first; the input counts as node 0.
      for (int delta = 2; delta <= 4; ++delta) {
        int target = j - delta;
        if (target >= 0) layout_.push_back({NodeKind::Skip, j, target});
      }
    }
  }

  int num_variable_nodes() const { return m_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  const std::vector<DecisionSlot>& layout() const { return layout_; }

  int num_decision_variables() const {
    int skips = 0;
    for (int j = 1; j <= m_; ++j) skips += std::min(j - 1, 3);
    return m_ + skips + std::min(m_, 3);
  }

  int num_skip_decisions() const { return num_decision_variables() - m_; }

  // Domain size of one decision position.
  int domain_size(std::size_t position) const {
    return layout_.at(position).kind == NodeKind::Variable ? LayerChoice::count : 2;
  }

  BigInt space_size() const {
    BigInt size = boost::multiprecision::pow(BigInt(31), static_cast<unsigned>(m_));
    return size << num_skip_decisions();
  }

  bool is_valid(const ArchConfig& cfg) const {
    if (cfg.decisions.size() != layout_.size()) return false;
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      if (cfg.decisions[i] < 0 || cfg.decisions[i] >= domain_size(i)) return false;
    }
    return true;
  }

  void validate(const ArchConfig& cfg) const {
    if (!is_valid(cfg)) {
      throw InvalidConfigError("architecture config does not fit this space");
    }
  }

  ArchConfig random_arch(Rng& rng) const {
    ArchConfig cfg;
    cfg.decisions.reserve(layout_.size());
    for (std::size_t i = 0; i < layout_.size(); ++i) {
      std::uniform_int_distribution<int> dist(0, domain_size(i) - 1);
      cfg.decisions.push_back(dist(rng));
    }
    return cfg;
  }

 private:
  int m_;
  int input_dim_;
  int output_dim_;
  std::vector<DecisionSlot> layout_;
};

struct HPConfig {
  double lr1 = 0.01;  // base learning rate (single-process)
  int bs1 = 256;      // base batch size
  int n = 1;          // data-parallel process count

  bool operator==(const HPConfig&) const = default;
};

// Hyperparameter space of the data-parallel training: log-uniform learning
// rate plus categorical batch-size and process-count lists.
class HPSpace {
 public:
  double lr_low = 0.001;
  double lr_high = 0.1;
  std::vector<int> batch_sizes{32, 64, 128, 256, 512, 1024};
  std::vector<int> process_counts{1, 2, 4, 8};

  HPConfig random_hp(Rng& rng) const {
    std::uniform_real_distribution<double> logu(std::log10(lr_low), std::log10(lr_high));
    std::uniform_int_distribution<std::size_t> bs(0, batch_sizes.size() - 1);
    std::uniform_int_distribution<std::size_t> n(0, process_counts.size() - 1);
    HPConfig cfg;
    cfg.lr1 = std::pow(10.0, logu(rng));
    cfg.bs1 = batch_sizes[bs(rng)];
    cfg.n = process_counts[n(rng)];
    return cfg;
  }

  bool is_valid(const HPConfig& cfg) const {
    bool bs_ok = std::find(batch_sizes.begin(), batch_sizes.end(), cfg.bs1) != batch_sizes.end();
    bool n_ok = std::find(process_counts.begin(), process_counts.end(), cfg.n) != process_counts.end();
    return bs_ok && n_ok && cfg.lr1 >= lr_low && cfg.lr1 <= lr_high;
  }

  void validate(const HPConfig& cfg) const {
    if (!is_valid(cfg)) throw InvalidConfigError("hyperparameter config outside space");
  }

  // Surrogate encoding: [log10(lr1), batch-size index, process-count index].
  // Categorical dimensions become ordinal indices so tree splits stay meaningful.
  std::vector<double> encode(const HPConfig& cfg) const {
    validate(cfg);
    auto bs = std::find(batch_sizes.begin(), batch_sizes.end(), cfg.bs1);
    auto n = std::find(process_counts.begin(), process_counts.end(), cfg.n);
    return {std::log10(cfg.lr1),
            static_cast<double>(bs - batch_sizes.begin()),
            static_cast<double>(n - process_counts.begin())};
  }

  HPConfig decode(const std::vector<double>& enc) const {
    if (enc.size() != 3) throw InvalidConfigError("encoded hp vector must have 3 entries");
    auto bs_idx = static_cast<std::size_t>(enc[1]);
    auto n_idx = static_cast<std::size_t>(enc[2]);
    if (bs_idx >= batch_sizes.size() || n_idx >= process_counts.size()) {
      throw InvalidConfigError("encoded hp index out of range");
    }
    return HPConfig{std::pow(10.0, enc[0]), batch_sizes[bs_idx], process_counts[n_idx]};
  }
};

}  // namespace evotune
