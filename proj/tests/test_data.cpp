#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "evotune/data.hpp"
#include "evotune/synthetic.hpp"

using namespace evotune;

namespace {

struct TempCsv {
  std::filesystem::path path;

  explicit TempCsv(const std::string& content) {
    path = std::filesystem::temp_directory_path() /
           ("evotune_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".csv");
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::filesystem::remove(path); }
};

std::string small_csv(int rows) {
  std::string content = "a,b,label\n";
  for (int r = 0; r < rows; ++r) {
    content += std::to_string(r) + "," + std::to_string(r % 7) + "," +
               std::to_string(r % 3) + "\n";
  }
  return content;
}

}  // namespace

TEST_CASE("split sizes follow the 42/25/33 rule", "[data]") {
  auto big = split_sizes(581012);
  CHECK(big.train == 244025);
  CHECK(big.valid == 145253);
  CHECK(big.test == 191734);
  CHECK(big.train + big.valid + big.test == 581012);

  auto small = split_sizes(100);
  CHECK(small.train == 42);
  CHECK(small.valid == 25);
  CHECK(small.test == 33);
}

TEST_CASE("csv loading splits and standardizes", "[data]") {
  TempCsv csv(small_csv(100));
  auto data = load_csv(csv.path.string(), "label", 5);
  CHECK(data.x_train.rows() == 42);
  CHECK(data.x_valid.rows() == 25);
  CHECK(data.x_test.rows() == 33);
  CHECK(data.num_classes == 3);
  CHECK(data.feature_names == std::vector<std::string>{"a", "b"});

  for (int c = 0; c < data.x_train.cols(); ++c) {
    CHECK(data.x_train.col(c).mean() == Catch::Approx(0.0).margin(1e-9));
    double var = data.x_train.col(c).array().square().mean();
    CHECK(var == Catch::Approx(1.0).margin(1e-9));
  }

  for (const Eigen::VectorXi* y : {&data.y_train, &data.y_valid, &data.y_test}) {
    for (Eigen::Index i = 0; i < y->size(); ++i) {
      CHECK((*y)[i] >= 0);
      CHECK((*y)[i] < 3);
    }
  }
}

TEST_CASE("the shuffled split is a permutation", "[data]") {
  TempCsv csv(small_csv(60));
  auto data = load_csv(csv.path.string(), "label", 9);
  // Column "a" held the distinct row indices 0..59. Standardization is
  // monotone, so across the three splits all 60 values must reappear,
  // pairwise distinct: no row lost, none duplicated.
  std::vector<double> all;
  for (const Eigen::MatrixXd* x : {&data.x_train, &data.x_valid, &data.x_test}) {
    for (Eigen::Index r = 0; r < x->rows(); ++r) all.push_back((*x)(r, 0));
  }
  REQUIRE(all.size() == 60);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i] > all[i - 1]);

  // Same seed reproduces the split exactly.
  auto again = load_csv(csv.path.string(), "label", 9);
  CHECK((again.x_train - data.x_train).cwiseAbs().maxCoeff() == 0.0);
  CHECK(again.y_train == data.y_train);
}

TEST_CASE("categorical features are one-hot encoded", "[data]") {
  TempCsv csv(
      "color,size,label\n"
      "red,1.0,0\n"
      "blue,2.0,1\n"
      "green,3.0,0\n"
      "red,4.0,1\n"
      "blue,5.0,0\n"
      "green,6.0,1\n"
      "red,7.0,0\n"
      "blue,8.0,1\n");
  auto data = load_csv(csv.path.string(), "label", 1);
  // blue/green/red expand lexicographically, then the numeric column.
  REQUIRE(data.feature_names.size() == 4);
  CHECK(data.feature_names[0] == "color=blue");
  CHECK(data.feature_names[1] == "color=green");
  CHECK(data.feature_names[2] == "color=red");
  CHECK(data.feature_names[3] == "size");
}

TEST_CASE("ingestion errors carry context", "[data]") {
  TempCsv missing(small_csv(20));
  CHECK_THROWS_AS(load_csv(missing.path.string(), "nope", 1), IngestionError);

  TempCsv single_class(
      "a,label\n"
      "1,0\n"
      "2,0\n"
      "3,0\n");
  CHECK_THROWS_AS(load_csv(single_class.path.string(), "label", 1), IngestionError);

  std::string wide = "a,label\n";
  for (int i = 0; i < 100; ++i) {
    wide += (i == 50 ? "oops" + std::to_string(i) : std::to_string(i)) + "," +
            std::to_string(i % 2) + "\n";
  }
  // One corrupt cell in an otherwise numeric column: too many distinct values
  // to treat as categorical, so ingestion reports the bad cell.
  TempCsv corrupt(wide);
  CHECK_THROWS_WITH(load_csv(corrupt.path.string(), "label", 1),
                    Catch::Matchers::ContainsSubstring("52"));

  TempCsv ragged(
      "a,b,label\n"
      "1,2,0\n"
      "1,1\n");
  CHECK_THROWS_AS(load_csv(ragged.path.string(), "label", 1), IngestionError);
}

TEST_CASE("synthetic data is balanced and deterministic", "[data]") {
  auto data = make_synthetic_tabular(700, 3);
  REQUIRE(data.features.rows() == 700);
  REQUIRE(data.features.cols() == 54);
  std::vector<long> counts(7, 0);
  for (Eigen::Index i = 0; i < data.labels.size(); ++i) {
    ++counts[static_cast<std::size_t>(data.labels[i])];
  }
  for (long c : counts) CHECK(c == 100);

  auto again = make_synthetic_tabular(700, 3);
  CHECK((again.features - data.features).cwiseAbs().maxCoeff() == 0.0);

  auto path = std::filesystem::temp_directory_path() / "evotune_synth_test.csv";
  write_synthetic_csv(data, path.string());
  auto loaded = load_csv(path.string(), "label", 2);
  CHECK(loaded.num_classes == 7);
  CHECK(loaded.x_train.rows() + loaded.x_valid.rows() + loaded.x_test.rows() == 700);
  std::filesystem::remove(path);
}
