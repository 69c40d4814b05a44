#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "simbridge/agent.hpp"

namespace simbridge {

// Line-delimited JSON records, one per train step and one per evaluation,
// with fixed keys. Number formatting is pinned (%.17g) so identical runs
// produce byte-identical files.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void train_row(const StepMetrics& m);
  void eval_row(long step, const EvalResult& r);
  void flush();

 private:
  std::FILE* f_ = nullptr;
};

struct EvalPoint {
  long step = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

// Evaluation records of a metrics file, in order.
std::vector<EvalPoint> read_eval_points(const std::string& metrics_path);

// Mean of the last `window` evaluation returns (all of them if fewer).
double final_score(const std::string& metrics_path, int window = 3);

}  // namespace simbridge
