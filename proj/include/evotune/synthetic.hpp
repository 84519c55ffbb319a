// Synthetic tabular classification data in the 54-feature / 7-class shape,
// with deliberately nonlinear class structure. Useful for demos and smoke
// runs when no real dataset is at hand.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evotune/common.hpp"

namespace evotune {

struct SyntheticData {
  Eigen::MatrixXd features;  // rows x 54, raw (unstandardized)
  Eigen::VectorXi labels;    // values in [0, 7)
};

// Classes are unions of angular sectors, radial shells and a sign-product
// region of a 6-D latent space, embedded linearly into 54 dimensions with
// additive noise. The class boundaries are far from linear, so a linear
// classifier is badly handicapped. Classes come out exactly balanced (up to
// the remainder of rows / 7).
inline SyntheticData make_synthetic_tabular(long rows, std::uint64_t seed) {
  if (rows < 7) throw InvalidInputError("need at least 7 rows");
  constexpr int kLatent = 6;
  constexpr int kFeatures = 54;
  constexpr int kClasses = 7;

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd embed(kLatent, kFeatures);
  for (int r = 0; r < kLatent; ++r) {
    for (int c = 0; c < kFeatures; ++c) embed(r, c) = gauss(rng);
  }

  auto latent_class = [](const Eigen::VectorXd& z) {
    double angle = std::atan2(z[1], z[0]) + std::numbers::pi;
    int sector = std::min(2, static_cast<int>(3.0 * angle / (2.0 * std::numbers::pi)));
    int shell = (z[2] * z[2] + z[3] * z[3] > 2.0 * std::numbers::ln2) ? 1 : 0;
    int cross = (z[4] * z[5] > 0.0) ? 1 : 0;
    return (4 * sector + 2 * shell + cross) % kClasses;
  };

  SyntheticData data;
  data.features.resize(rows, kFeatures);
  data.labels.resize(rows);

  std::vector<long> quota(kClasses, rows / kClasses);
  for (long i = 0; i < rows % kClasses; ++i) ++quota[static_cast<std::size_t>(i)];

  long filled = 0;
  Eigen::VectorXd z(kLatent);
  while (filled < rows) {
    for (int i = 0; i < kLatent; ++i) z[i] = gauss(rng);
    int label = latent_class(z);
    if (quota[static_cast<std::size_t>(label)] == 0) continue;
    --quota[static_cast<std::size_t>(label)];
    Eigen::RowVectorXd row = z.transpose() * embed;
    for (int c = 0; c < kFeatures; ++c) row[c] += 0.3 * gauss(rng);
    data.features.row(filled) = row;
    data.labels[filled] = label;
    ++filled;
  }
  return data;
}

// Writes the synthetic data to a headered CSV with feature columns f0..f53
// and integer labels 1..7 in a final "label" column.
inline void write_synthetic_csv(const SyntheticData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (int c = 0; c < data.features.cols(); ++c) out << 'f' << c << ',';
  out << "label\n";
  char buffer[64];
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
      std::snprintf(buffer, sizeof(buffer), "%.9g", data.features(r, c));
      out << buffer << ',';
    }
    out << data.labels[r] + 1 << '\n';
  }
}

}  // namespace evotune
