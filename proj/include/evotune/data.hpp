// Tabular CSV ingestion: typed column detection, one-hot encoding of
// categorical features, seeded 42/25/33 splits, and train-statistics
// standardization.
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "evotune/common.hpp"
#include "evotune/train.hpp"

namespace evotune {

struct SplitSizes {
  long train = 0;
  long valid = 0;
  long test = 0;
};

// train = floor(0.42 N), valid = floor(0.25 N), test takes the remainder.
inline SplitSizes split_sizes(long n) {
  SplitSizes sizes;
  sizes.train = static_cast<long>(std::floor(0.42 * static_cast<double>(n)));
  sizes.valid = static_cast<long>(std::floor(0.25 * static_cast<double>(n)));
  sizes.test = n - sizes.train - sizes.valid;
  return sizes;
}

struct TabularDataset {
  Eigen::MatrixXd x_train, x_valid, x_test;
  Eigen::VectorXi y_train, y_valid, y_test;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  int num_classes = 0;

  DatasetView<double> view() const { return {x_train, y_train, x_valid, y_valid}; }
};

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace detail

// Loads a headered CSV, builds the seeded shuffled split, one-hot encodes
// categorical feature columns, maps labels to [0, C) in lexicographic order,
// and standardizes every feature column with training-split statistics.
inline TabularDataset load_csv(const std::string& path, const std::string& label_column,
                               std::uint64_t split_seed) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw IngestionError(path + " is empty");
  std::vector<std::string> header = detail::split_csv_line(line);

  long label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = static_cast<long>(i);
  }
  if (label_idx < 0) throw IngestionError("no column named '" + label_column + "' in " + path);

  std::vector<std::vector<std::string>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IngestionError(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw IngestionError(path + " has no data rows");
  long n = static_cast<long>(rows.size());

  // Column typing: numeric unless some cell fails to parse. Non-numeric
  // columns become one-hot features, within a sane cardinality.
  constexpr std::size_t kMaxCategories = 64;
  struct Column {
    std::size_t index = 0;
    bool numeric = true;
    long first_bad_row = -1;
    std::map<std::string, int> categories;
  };
  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<long>(c) == label_idx) continue;
    Column col;
    col.index = c;
    for (long r = 0; r < n; ++r) {
      double value;
      if (!detail::parse_double(rows[static_cast<std::size_t>(r)][c], value)) {
        col.numeric = false;
        if (col.first_bad_row < 0) col.first_bad_row = r + 2;  // 1-based + header
        break;
      }
    }
    if (!col.numeric) {
      for (long r = 0; r < n; ++r) {
        col.categories.emplace(rows[static_cast<std::size_t>(r)][c],
                               static_cast<int>(col.categories.size()));
      }
      if (col.categories.size() > kMaxCategories) {
        throw IngestionError(path + ":" + std::to_string(col.first_bad_row) +
                             ": non-numeric cell in column '" + header[c] +
                             "' with too many distinct values to one-hot encode");
      }
      int next = 0;
      for (auto& [value, idx] : col.categories) idx = next++;  // lexicographic codes
    }
    columns.push_back(std::move(col));
  }

  std::vector<std::string> feature_names;
  long width = 0;
  for (const auto& col : columns) {
    if (col.numeric) {
      feature_names.push_back(header[col.index]);
      ++width;
    } else {
      for (const auto& [value, idx] : col.categories) {
        feature_names.push_back(header[col.index] + "=" + value);
      }
      width += static_cast<long>(col.categories.size());
    }
  }

  Eigen::MatrixXd features(n, width);
  features.setZero();
  for (long r = 0; r < n; ++r) {
    long out = 0;
    for (const auto& col : columns) {
      const std::string& cell = rows[static_cast<std::size_t>(r)][col.index];
      if (col.numeric) {
        double value = 0.0;
        detail::parse_double(cell, value);
        features(r, out++) = value;
      } else {
        features(r, out + col.categories.at(cell)) = 1.0;
        out += static_cast<long>(col.categories.size());
      }
    }
  }

  std::map<std::string, int> label_codes;
  for (long r = 0; r < n; ++r) {
    label_codes.emplace(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(label_idx)], 0);
  }
  if (label_codes.size() < 2) throw IngestionError(path + ": label column has a single class");
  int next_code = 0;
  for (auto& [value, code] : label_codes) code = next_code++;
  Eigen::VectorXi labels(n);
  for (long r = 0; r < n; ++r) {
    labels[r] =
        label_codes.at(rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(label_idx)]);
  }

  // Seeded shuffle, then contiguous slices per split.
  std::vector<long> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0L);
  Rng rng(split_seed);
  for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
    std::uniform_int_distribution<std::size_t> dist(i, perm.size() - 1);
    std::swap(perm[i], perm[dist(rng)]);
  }
  SplitSizes sizes = split_sizes(n);

  TabularDataset dataset;
  dataset.feature_names = std::move(feature_names);
  dataset.num_classes = static_cast<int>(label_codes.size());
  for (const auto& [value, code] : label_codes) dataset.class_names.push_back(value);

  auto take = [&](long offset, long count, Eigen::MatrixXd& x, Eigen::VectorXi& y) {
    x.resize(count, width);
    y.resize(count);
    for (long i = 0; i < count; ++i) {
      x.row(i) = features.row(perm[static_cast<std::size_t>(offset + i)]);
      y[i] = labels[perm[static_cast<std::size_t>(offset + i)]];
    }
  };
  take(0, sizes.train, dataset.x_train, dataset.y_train);
  take(sizes.train, sizes.valid, dataset.x_valid, dataset.y_valid);
  take(sizes.train + sizes.valid, sizes.test, dataset.x_test, dataset.y_test);

  // Standardize with training statistics only.
  Eigen::RowVectorXd mean = dataset.x_train.colwise().mean();
  Eigen::RowVectorXd std_dev =
      ((dataset.x_train.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (long c = 0; c < width; ++c) {
    if (std_dev[c] == 0.0) std_dev[c] = 1.0;
  }
  for (Eigen::MatrixXd* x : {&dataset.x_train, &dataset.x_valid, &dataset.x_test}) {
    x->rowwise() -= mean;
    x->array().rowwise() /= std_dev.array();
  }
  return dataset;
}

}  // namespace evotune
