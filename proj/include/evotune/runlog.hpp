// Line-delimited run log: a header object carrying the run configuration
// followed by one object per completed evaluation.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evotune/common.hpp"
#include "evotune/evolution.hpp"

namespace evotune {

inline nlohmann::json to_json(const EvaluationRecord& rec) {
  return {
      {"id", rec.job_id},
      {"arch", rec.arch.decisions},
      {"hp", {{"lr1", rec.hp.lr1}, {"bs1", rec.hp.bs1}, {"n", rec.hp.n}}},
      {"objective", rec.objective},
      {"status", rec.status == EvalStatus::Ok ? "ok" : "failed"},
      {"submit_time", rec.submit_time},
      {"finish_time", rec.finish_time},
      {"train_time", rec.train_time},
      {"worker", rec.worker_id},
      {"hp_clamped", rec.hp_clamped},
  };
}

inline EvaluationRecord record_from_json(const nlohmann::json& j) {
  EvaluationRecord rec;
  rec.job_id = j.at("id").get<std::int64_t>();
  rec.arch.decisions = j.at("arch").get<std::vector<int>>();
  rec.hp.lr1 = j.at("hp").at("lr1").get<double>();
  rec.hp.bs1 = j.at("hp").at("bs1").get<int>();
  rec.hp.n = j.at("hp").at("n").get<int>();
  rec.objective = j.at("objective").get<double>();
  rec.status = j.at("status").get<std::string>() == "ok" ? EvalStatus::Ok : EvalStatus::Failed;
  rec.submit_time = j.at("submit_time").get<double>();
  rec.finish_time = j.at("finish_time").get<double>();
  rec.train_time = j.at("train_time").get<double>();
  rec.worker_id = j.at("worker").get<int>();
  rec.hp_clamped = j.value("hp_clamped", false);
  return rec;
}

struct RunLog {
  nlohmann::json header;
  std::vector<EvaluationRecord> records;
};

// Serialized appends; meant to be fed from the single controller thread.
class RunLogWriter {
 public:
  RunLogWriter(const std::string& path, const nlohmann::json& config) : out_(path) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    nlohmann::json header = {{"type", "header"}, {"config", config}};
    out_ << header.dump() << '\n';
    out_.flush();
  }

  void append(const EvaluationRecord& rec) {
    nlohmann::json j = to_json(rec);
    j["type"] = "eval";
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

inline RunLog read_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  RunLog log;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed log line");
    }
    std::string type = j.value("type", "eval");
    if (type == "header") {
      log.header = j.value("config", nlohmann::json::object());
    } else {
      log.records.push_back(record_from_json(j));
    }
  }
  return log;
}

}  // namespace evotune
