// Test-side oracles kept independent of the library implementation paths
// they check.
#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "evotune/model.hpp"

namespace oracles {

// Pearson chi-square statistic against uniform expected counts.
inline double chi_square_uniform(const std::vector<long>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0.0;
  for (long c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// 99th-percentile critical values of the chi-square distribution, standard
// table entries for the degrees of freedom used in these tests.
inline double chi_square_crit_99(int df) {
  static const std::map<int, double> table = {
      {1, 6.6349}, {3, 11.3449}, {5, 15.0863}, {9, 21.6660},
      {23, 41.6384}, {29, 49.5879}, {30, 50.8922},
  };
  auto it = table.find(df);
  if (it == table.end()) throw std::out_of_range("no tabulated chi-square value for df");
  return it->second;
}

// Central finite-difference gradient of the mean cross-entropy loss with
// respect to every parameter of the plan.
template <typename Scalar>
std::vector<evotune::MatrixT<Scalar>> finite_difference_grads(
    evotune::NetworkPlan<Scalar>& plan, const evotune::MatrixT<Scalar>& batch,
    const Eigen::VectorXi& labels, Scalar h = Scalar(1e-5)) {
  auto loss_at = [&]() {
    std::vector<evotune::MatrixT<Scalar>> unused;
    return evotune::loss_and_grad(plan, batch, labels, unused);
  };
  std::vector<evotune::MatrixT<Scalar>> grads = plan.zero_gradients();
  for (std::size_t p = 0; p < plan.params.size(); ++p) {
    for (Eigen::Index c = 0; c < plan.params[p].cols(); ++c) {
      for (Eigen::Index r = 0; r < plan.params[p].rows(); ++r) {
        Scalar saved = plan.params[p](r, c);
        plan.params[p](r, c) = saved + h;
        Scalar up = loss_at();
        plan.params[p](r, c) = saved - h;
        Scalar down = loss_at();
        plan.params[p](r, c) = saved;
        grads[p](r, c) = (up - down) / (2 * h);
      }
    }
  }
  return grads;
}

// Largest mixed absolute/relative deviation between analytic and
// finite-difference gradients.
template <typename Scalar>
double max_grad_deviation(const std::vector<evotune::MatrixT<Scalar>>& analytic,
                          const std::vector<evotune::MatrixT<Scalar>>& numeric) {
  double worst = 0.0;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    for (Eigen::Index c = 0; c < analytic[p].cols(); ++c) {
      for (Eigen::Index r = 0; r < analytic[p].rows(); ++r) {
        double a = static_cast<double>(analytic[p](r, c));
        double n = static_cast<double>(numeric[p](r, c));
        double scale = 1.0 + std::max(std::abs(a), std::abs(n));
        worst = std::max(worst, std::abs(a - n) / scale);
      }
    }
  }
  return worst;
}

}  // namespace oracles
