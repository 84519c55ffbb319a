// Run-log analyses: best-so-far trajectories, high-performer counting against
// a cross-run quantile threshold, and 2-D PCA of the top configurations.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evotune/common.hpp"
#include "evotune/runlog.hpp"
#include "evotune/space.hpp"

namespace evotune {

struct TrajectoryPoint {
  double time = 0.0;
  double objective = 0.0;  // running maximum
};

// Ok records sorted by finish time for analysis purposes.
inline std::vector<EvaluationRecord> ok_records_by_time(const RunLog& log) {
  std::vector<EvaluationRecord> ok;
  for (const auto& rec : log.records) {
    if (rec.status == EvalStatus::Ok) ok.push_back(rec);
  }
  std::stable_sort(ok.begin(), ok.end(), [](const auto& a, const auto& b) {
    return a.finish_time < b.finish_time;
  });
  return ok;
}

// Step function of the running maximum objective by finish time; one point
// per ok record.
inline std::vector<TrajectoryPoint> best_so_far(const RunLog& log) {
  auto ok = ok_records_by_time(log);
  if (ok.empty()) throw EmptyInputError("best_so_far on a log with no ok records");
  std::vector<TrajectoryPoint> curve;
  curve.reserve(ok.size());
  double best = -1.0;
  for (const auto& rec : ok) {
    best = std::max(best, rec.objective);
    curve.push_back({rec.finish_time, best});
  }
  return curve;
}

// Linear-interpolation quantile between order statistics (index p*(n-1)).
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyInputError("quantile of empty data");
  std::sort(values.begin(), values.end());
  double pos = p * static_cast<double>(values.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

struct CountPoint {
  double time = 0.0;
  long count = 0;
};

struct HighPerformerCounts {
  double threshold = 0.0;  // min over logs of each log's 0.99-quantile
  std::vector<std::vector<CountPoint>> curves;
};

// Cumulative count of unique architectures whose objective strictly exceeds
// the cross-log threshold, one curve per log.
inline HighPerformerCounts high_performer_counts(const std::vector<RunLog>& logs,
                                                 double quantile_p = 0.99) {
  if (logs.empty()) throw EmptyInputError("no logs given");
  HighPerformerCounts result;
  result.threshold = std::numeric_limits<double>::infinity();
  for (const auto& log : logs) {
    std::vector<double> objectives;
    for (const auto& rec : log.records) {
      if (rec.status == EvalStatus::Ok) objectives.push_back(rec.objective);
    }
    if (objectives.empty()) throw EmptyInputError("log with no ok records");
    result.threshold = std::min(result.threshold, quantile(objectives, quantile_p));
  }

  for (const auto& log : logs) {
    std::set<std::vector<int>> seen;
    std::vector<CountPoint> curve;
    long count = 0;
    for (const auto& rec : ok_records_by_time(log)) {
      if (rec.objective > result.threshold && seen.insert(rec.arch.decisions).second) {
        ++count;
      }
      curve.push_back({rec.finish_time, count});
    }
    result.curves.push_back(std::move(curve));
  }
  return result;
}

namespace detail {

// Top-2 eigenpairs of a symmetric PSD matrix by power iteration with
// deflation. Returns {eigenvalues, eigenvectors-as-columns}.
inline std::pair<std::array<double, 2>, Eigen::MatrixXd> top2_eigen(Eigen::MatrixXd cov) {
  std::array<double, 2> values{0.0, 0.0};
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(cov.rows(), 2);
  Rng rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v(cov.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unit(rng);
    double norm = v.norm();
    if (norm == 0.0) break;
    v /= norm;
    for (int iter = 0; iter < 10000; ++iter) {
      Eigen::VectorXd next = cov * v;
      double next_norm = next.norm();
      if (next_norm < 1e-300) {
        v.setZero();
        break;
      }
      next /= next_norm;
      // Sign flips between iterations are convergence too.
      double change = std::min((next - v).norm(), (next + v).norm());
      v = next;
      if (change < 1e-14) break;
    }
    double lambda = v.squaredNorm() > 0.0 ? v.dot(cov * v) : 0.0;
    values[static_cast<std::size_t>(k)] = std::max(0.0, lambda);
    vectors.col(k) = v;
    cov -= values[static_cast<std::size_t>(k)] * v * v.transpose();
  }
  return {values, vectors};
}

struct Pca2D {
  Eigen::MatrixXd points;           // rows x 2
  std::array<double, 2> ratios{0.0, 0.0};
};

inline Pca2D pca2d(const Eigen::MatrixXd& data) {
  Pca2D out;
  Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(1, data.rows()));
  double total = cov.trace();
  if (total <= 1e-300) {
    out.points = Eigen::MatrixXd::Zero(data.rows(), 2);
    return out;
  }
  auto [values, vectors] = top2_eigen(cov);
  out.points = centered * vectors;
  out.ratios = {values[0] / total, values[1] / total};
  return out;
}

}  // namespace detail

struct TopConfigPca {
  detail::Pca2D arch;
  detail::Pca2D hp;
  std::size_t top_count = 0;
};

// Projects the architecture decisions and encoded hyperparameters of the top
// `fraction` of ok records (by objective) onto their first two principal
// components, separately per space.
inline TopConfigPca pca_top_configs(const RunLog& log, double fraction,
                                    const HPSpace& hp_space = {}) {
  auto ok = ok_records_by_time(log);
  std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(ok.size())));
  if (k < 3) throw InvalidInputError("need at least 3 records in the top fraction");
  std::stable_sort(ok.begin(), ok.end(),
                   [](const auto& a, const auto& b) { return a.objective > b.objective; });
  ok.resize(k);

  Eigen::MatrixXd arch(static_cast<Eigen::Index>(k),
                       static_cast<Eigen::Index>(ok.front().arch.decisions.size()));
  Eigen::MatrixXd hp(static_cast<Eigen::Index>(k), 3);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < ok[r].arch.decisions.size(); ++c) {
      arch(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          static_cast<double>(ok[r].arch.decisions[c]);
    }
    auto enc = hp_space.encode(ok[r].hp);
    for (int c = 0; c < 3; ++c) hp(static_cast<Eigen::Index>(r), c) = enc[static_cast<std::size_t>(c)];
  }

  TopConfigPca out;
  out.arch = detail::pca2d(arch);
  out.hp = detail::pca2d(hp);
  out.top_count = k;
  return out;
}

namespace detail {

inline std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace detail

// Writes trajectory.csv, counts.csv, pca.csv and best_so_far.svg for one log.
// Output is byte-stable for identical logs.
inline void emit_artifacts(const RunLog& log, const std::string& out_dir,
                           double top_fraction = 0.01, const HPSpace& hp_space = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw IoError("cannot create directory " + out_dir);

  auto ok = ok_records_by_time(log);

  {
    auto out = detail::open_out(fs::path(out_dir) / "trajectory.csv");
    out << "finish_time,objective,best_so_far\n";
    double best = -1.0;
    for (const auto& rec : ok) {
      best = std::max(best, rec.objective);
      out << detail::format_double(rec.finish_time) << ','
          << detail::format_double(rec.objective) << ',' << detail::format_double(best) << '\n';
    }
  }

  {
    auto out = detail::open_out(fs::path(out_dir) / "counts.csv");
    out << "finish_time,unique_high_performers,threshold\n";
    if (!ok.empty()) {
      auto counts = high_performer_counts({log});
      for (const auto& point : counts.curves.front()) {
        out << detail::format_double(point.time) << ',' << point.count << ','
            << detail::format_double(counts.threshold) << '\n';
      }
    }
  }

  {
    auto out = detail::open_out(fs::path(out_dir) / "pca.csv");
    out << "space,row,pc1,pc2,explained_1,explained_2\n";
    std::size_t top = static_cast<std::size_t>(
        std::ceil(top_fraction * static_cast<double>(ok.size())));
    if (top >= 3) {
      auto pca = pca_top_configs(log, top_fraction, hp_space);
      auto dump = [&out](const char* name, const detail::Pca2D& p) {
        for (Eigen::Index r = 0; r < p.points.rows(); ++r) {
          out << name << ',' << r << ',' << detail::format_double(p.points(r, 0)) << ','
              << detail::format_double(p.points(r, 1)) << ','
              << detail::format_double(p.ratios[0]) << ','
              << detail::format_double(p.ratios[1]) << '\n';
        }
      };
      dump("arch", pca.arch);
      dump("hp", pca.hp);
    }
  }

  {
    auto out = detail::open_out(fs::path(out_dir) / "best_so_far.svg");
    constexpr double kWidth = 640.0, kHeight = 400.0, kPad = 48.0;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << kPad << "\" y1=\"" << kHeight - kPad << "\" x2=\"" << kWidth - kPad
        << "\" y2=\"" << kHeight - kPad << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\""
        << kHeight - kPad << "\" stroke=\"black\"/>\n";
    if (!ok.empty()) {
      auto curve = best_so_far(log);
      double t_max = std::max(curve.back().time, 1e-9);
      out << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
      double best_prev = -1.0;
      for (std::size_t i = 0; i < curve.size(); ++i) {
        double x = kPad + (kWidth - 2 * kPad) * (curve[i].time / t_max);
        double y = kHeight - kPad - (kHeight - 2 * kPad) * curve[i].objective;
        if (i > 0) {
          double y_prev = kHeight - kPad - (kHeight - 2 * kPad) * best_prev;
          out << detail::format_double(x) << ',' << detail::format_double(y_prev) << ' ';
        }
        out << detail::format_double(x) << ',' << detail::format_double(y) << ' ';
        best_prev = curve[i].objective;
      }
      out << "\"/>\n";
    }
    out << "  <text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-size=\"12\">time (s)</text>\n";
    out << "  <text x=\"14\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << kHeight / 2 << ")\">best validation accuracy</text>\n";
    out << "</svg>\n";
  }
}

}  // namespace evotune
