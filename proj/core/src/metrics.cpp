#include "simbridge/metrics.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "simbridge/errors.hpp"

namespace simbridge {

MetricsWriter::MetricsWriter(const std::string& path) {
  f_ = std::fopen(path.c_str(), "wb");
  if (f_ == nullptr) {
    throw ContractViolation("MetricsWriter: cannot open " + path);
  }
}

MetricsWriter::~MetricsWriter() {
  if (f_ != nullptr) std::fclose(f_);
}

void MetricsWriter::train_row(const StepMetrics& m) {
  std::fprintf(f_,
               "{\"step\":%ld,\"q_loss\":%.17g,\"v_loss\":%.17g,"
               "\"pi_loss\":%.17g,\"beta\":%.17g,\"ratio_mean\":%.17g,"
               "\"ratio_max\":%.17g,\"ratio_min\":%.17g}\n",
               m.step, m.q_loss, m.v_loss, m.pi_loss, m.beta, m.ratio_mean,
               m.ratio_max, m.ratio_min);
}

void MetricsWriter::eval_row(long step, const EvalResult& r) {
  std::fprintf(f_,
               "{\"step\":%ld,\"eval_return_mean\":%.17g,"
               "\"eval_return_std\":%.17g}\n",
               step, r.mean, r.stddev);
}

void MetricsWriter::flush() { std::fflush(f_); }

std::vector<EvalPoint> read_eval_points(const std::string& metrics_path) {
  std::ifstream in(metrics_path);
  if (!in) {
    throw ContractViolation("read_eval_points: cannot open " + metrics_path);
  }
  std::vector<EvalPoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("eval_return_mean") == std::string::npos) continue;
    const auto row = nlohmann::json::parse(line);
    EvalPoint p;
    p.step = row.at("step").get<long>();
    p.mean = row.at("eval_return_mean").get<double>();
    p.stddev = row.at("eval_return_std").get<double>();
    points.push_back(p);
  }
  return points;
}

double final_score(const std::string& metrics_path, int window) {
  const auto points = read_eval_points(metrics_path);
  if (points.empty()) {
    throw ContractViolation("final_score: no evaluations in " + metrics_path);
  }
  const std::size_t n = std::min<std::size_t>(window, points.size());
  double sum = 0.0;
  for (std::size_t i = points.size() - n; i < points.size(); ++i) {
    sum += points[i].mean;
  }
  return sum / static_cast<double>(n);
}

}  // namespace simbridge
