// Command-line front end: run searches, analyze run logs, inspect dataset
// splits, and generate demo data.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "evotune/analysis.hpp"
#include "evotune/controller.hpp"
#include "evotune/data.hpp"
#include "evotune/runlog.hpp"
#include "evotune/synthetic.hpp"
#include "evotune/train.hpp"

namespace {

using namespace evotune;

struct SearchOptions {
  std::string data_path;
  std::string label_col = "label";
  std::string out_dir = "run";
  std::string mode = "agebo";
  std::string backend = "trainer";
  std::string objective = "arch-target";
  int population = 100;
  int sample = 10;
  int workers = 4;
  int nodes = 10;
  int epochs = 20;
  int n_max = 8;
  int n_initial = 10;
  int n_candidates = 10000;
  double kappa = 0.001;
  double wall_time = 0.0;
  std::int64_t max_evals = 0;
  std::uint64_t seed = 0;
  double fixed_lr = 0.01;
  int fixed_bs = 256;
  int fixed_n = 1;
};

SearchMode parse_mode(const std::string& mode) {
  if (mode == "age") return SearchMode::AgE;
  if (mode == "age-n") return SearchMode::AgEN;
  if (mode == "agebo") return SearchMode::AgEBO;
  throw CLI::ValidationError("--mode", "unknown mode '" + mode + "'");
}

int run_search(const SearchOptions& opt) {
  namespace fs = std::filesystem;
  fs::create_directories(opt.out_dir);

  SearchConfig cfg;
  cfg.mode = parse_mode(opt.mode);
  cfg.population_size = opt.population;
  cfg.sample_size = opt.sample;
  cfg.workers = opt.workers;
  cfg.kappa = opt.kappa;
  cfg.n_initial = opt.n_initial;
  cfg.n_candidates = opt.n_candidates;
  cfg.seed = opt.seed;
  cfg.max_evaluations = opt.max_evals;
  cfg.fixed_hp = HPConfig{opt.fixed_lr, opt.fixed_bs, opt.fixed_n};
  if (opt.wall_time > 0.0) cfg.wall_time_limit = opt.wall_time;

  std::unique_ptr<Executor> pool;
  std::unique_ptr<TabularDataset> dataset;

  if (opt.backend == "trainer") {
    if (opt.data_path.empty()) {
      std::cerr << "the trainer backend needs --data\n";
      return 1;
    }
    dataset = std::make_unique<TabularDataset>(
        load_csv(opt.data_path, opt.label_col, opt.seed));
    cfg.arch_space = ArchSpace(opt.nodes, static_cast<int>(dataset->x_train.cols()),
                               dataset->num_classes);
    std::cout << "loaded " << opt.data_path << ": "
              << dataset->x_train.rows() + dataset->x_valid.rows() + dataset->x_test.rows()
              << " rows, " << dataset->x_train.cols() << " features, "
              << dataset->num_classes << " classes\n";

    const TabularDataset* data = dataset.get();
    ArchSpace space = cfg.arch_space;
    int epochs = opt.epochs;
    int n_max = opt.n_max;
    std::uint64_t seed = opt.seed;
    EvalFn eval = [data, space, epochs, n_max, seed](const Job& job) {
      TrainConfig tc;
      tc.lr1 = job.hp.lr1;
      tc.bs1 = job.hp.bs1;
      tc.n_shards = std::min(job.hp.n, n_max);
      tc.epochs = epochs;
      tc.seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(job.id + 1));
      auto plan = build<double>(job.arch, space);
      auto result = train(plan, data->view(), tc);
      return EvalOutcome{result.valid_accuracy, result.status, result.wall_time,
                         job.hp.n > n_max};
    };
    pool = std::make_unique<ThreadPoolExecutor>(opt.workers, eval);
    cfg.poll_interval = 0.05;
  } else if (opt.backend == "simulated") {
    cfg.arch_space = ArchSpace(opt.nodes, 54, 7);
    auto registry = simulated_objectives();
    auto it = registry.find(opt.objective);
    if (it == registry.end()) {
      std::cerr << "unknown simulated objective '" << opt.objective << "'; available:";
      for (const auto& [name, factory] : registry) std::cerr << ' ' << name;
      std::cerr << '\n';
      return 1;
    }
    pool = std::make_unique<SimulatedExecutor>(opt.workers,
                                               it->second(cfg.arch_space, opt.seed));
    cfg.poll_interval = 0.0;
  } else {
    std::cerr << "unknown backend '" << opt.backend << "'\n";
    return 1;
  }

  nlohmann::json header = {
      {"mode", opt.mode},         {"P", opt.population},
      {"S", opt.sample},          {"W", opt.workers},
      {"kappa", opt.kappa},       {"seed", opt.seed},
      {"wall_time", opt.wall_time}, {"max_evals", opt.max_evals},
      {"dataset", opt.data_path}, {"backend", opt.backend},
      {"n_max", opt.n_max},       {"epochs", opt.epochs},
      {"nodes", opt.nodes},       {"label_col", opt.label_col},
      {"n_initial", opt.n_initial}, {"n_candidates", opt.n_candidates},
      {"fixed_hp", {{"lr1", opt.fixed_lr}, {"bs1", opt.fixed_bs}, {"n", opt.fixed_n}}},
  };
  auto log_path = fs::path(opt.out_dir) / "run.jsonl";
  RunLogWriter writer(log_path.string(), header);

  long completed = 0;
  auto state = run(cfg, *pool, [&writer, &completed](const EvaluationRecord& rec) {
    writer.append(rec);
    ++completed;
    if (completed % 25 == 0) {
      std::cout << "evaluations: " << completed << "\n" << std::flush;
    }
  });

  const auto& top = best(state);
  std::cout << "finished after " << state.history.size() << " evaluations\n";
  std::cout << "best objective " << top.objective << " (job " << top.job_id << ", lr1 "
            << top.hp.lr1 << ", bs1 " << top.hp.bs1 << ", n " << top.hp.n << ")\n";
  std::cout << "log written to " << log_path.string() << "\n";
  return 0;
}

int run_analyze(const std::vector<std::string>& log_paths, const std::string& out_dir,
                double fraction) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<RunLog> logs;
  for (const auto& path : log_paths) logs.push_back(read_run_log(path));

  for (std::size_t i = 0; i < logs.size(); ++i) {
    std::string dir = logs.size() == 1
                          ? out_dir
                          : (fs::path(out_dir) / ("log_" + std::to_string(i))).string();
    emit_artifacts(logs[i], dir, fraction);
    std::cout << "artifacts for " << log_paths[i] << " in " << dir << "\n";
  }

  if (logs.size() > 1) {
    auto counts = high_performer_counts(logs);
    auto out = std::ofstream(fs::path(out_dir) / "counts_all.csv");
    out << "log,finish_time,unique_high_performers,threshold\n";
    for (std::size_t i = 0; i < counts.curves.size(); ++i) {
      for (const auto& point : counts.curves[i]) {
        out << i << ',' << point.time << ',' << point.count << ',' << counts.threshold
            << '\n';
      }
    }
    std::cout << "cross-log threshold " << counts.threshold << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint architecture + hyperparameter search for tabular data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value run configuration file ([search] section)");
  app.fallthrough();

  SearchOptions search_opt;
  auto* search = app.add_subcommand("search", "run a search");
  search->fallthrough();
  search->add_option("--data", search_opt.data_path, "input CSV with a header row");
  search->add_option("--label-col", search_opt.label_col, "label column name");
  search->add_option("--out", search_opt.out_dir, "output directory for the run log");
  search->add_option("--mode", search_opt.mode, "age | age-n | agebo");
  search->add_option("--backend", search_opt.backend, "trainer | simulated");
  search->add_option("--objective", search_opt.objective, "simulated objective name");
  search->add_option("-P,--population", search_opt.population, "population capacity");
  search->add_option("-S,--sample", search_opt.sample, "tournament sample size");
  search->add_option("-W,--workers", search_opt.workers, "parallel evaluation slots");
  search->add_option("--nodes", search_opt.nodes, "variable nodes in the architecture space");
  search->add_option("--epochs", search_opt.epochs, "training epochs per evaluation");
  search->add_option("--n-max", search_opt.n_max, "cap on data-parallel shards per job");
  search->add_option("--kappa", search_opt.kappa, "UCB exploration weight");
  search->add_option("--n-initial", search_opt.n_initial, "random tells before model-based asks");
  search->add_option("--n-candidates", search_opt.n_candidates, "acquisition sample size");
  search->add_option("--wall-time", search_opt.wall_time, "wall-time limit in seconds");
  search->add_option("--max-evals", search_opt.max_evals, "evaluation budget");
  search->add_option("--seed", search_opt.seed, "random seed");
  search->add_option("--lr", search_opt.fixed_lr, "fixed base learning rate (age / age-n)");
  search->add_option("--bs", search_opt.fixed_bs, "fixed base batch size (age / age-n)");
  search->add_option("--n", search_opt.fixed_n, "fixed process count (age / age-n)");

  std::vector<std::string> log_paths;
  std::string analyze_out = "analysis";
  double fraction = 0.01;
  auto* analyze = app.add_subcommand("analyze", "derive artifacts from run logs");
  analyze->add_option("--log", log_paths, "run log path(s)")->required()->expected(-1);
  analyze->add_option("--out", analyze_out, "output directory");
  analyze->add_option("--top-fraction", fraction, "fraction of records for the PCA");

  auto* datasets = app.add_subcommand("datasets", "dataset utilities");
  datasets->require_subcommand(1);

  std::string check_path, check_label = "label";
  std::uint64_t check_seed = 0;
  auto* split_check = datasets->add_subcommand("split-check", "print split sizes");
  split_check->add_option("--data", check_path, "input CSV")->required();
  split_check->add_option("--label-col", check_label, "label column name");
  split_check->add_option("--seed", check_seed, "split seed");

  long synth_rows = 10000;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "synthetic.csv";
  auto* synth = datasets->add_subcommand("synth", "generate demo data (54 features, 7 classes)");
  synth->add_option("--rows", synth_rows, "row count");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*search) return run_search(search_opt);
    if (*analyze) return run_analyze(log_paths, analyze_out, fraction);
    if (*split_check) {
      auto data = load_csv(check_path, check_label, check_seed);
      long n = data.x_train.rows() + data.x_valid.rows() + data.x_test.rows();
      auto sizes = split_sizes(n);
      std::cout << "rows " << n << ": train " << sizes.train << ", valid " << sizes.valid
                << ", test " << sizes.test << " (" << data.num_classes << " classes)\n";
      return 0;
    }
    if (*synth) {
      write_synthetic_csv(make_synthetic_tabular(synth_rows, synth_seed), synth_out);
      std::cout << "wrote " << synth_rows << " rows to " << synth_out << "\n";
      return 0;
    }
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
