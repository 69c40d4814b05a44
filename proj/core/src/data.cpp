#include "simbridge/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

constexpr char kMagic[] = "sbds";
constexpr int kVersion = 1;

void put_f64_le(std::string& buf, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>(static_cast<unsigned char>(bits >> (8 * i))));
  }
}

double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string to_string(Domain d) { return d == Domain::real ? "real" : "sim"; }

ReplayBuffer::ReplayBuffer(std::size_t capacity, Domain required)
    : capacity_(capacity), required_(required) {
  if (capacity_ == 0) {
    throw ContractViolation("ReplayBuffer: capacity must be positive");
  }
}

void ReplayBuffer::insert(Transition t) {
  if (t.domain != required_) {
    throw DomainContamination("ReplayBuffer::insert: transition tagged " +
                              to_string(t.domain) + ", buffer requires " +
                              to_string(required_));
  }
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

void ReplayBuffer::sample(std::size_t k, Rng& rng,
                          std::vector<const Transition*>& out) const {
  if (items_.empty()) {
    throw EmptyBuffer("ReplayBuffer::sample: buffer is empty");
  }
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = &items_[rng.below(items_.size())];
  }
}

double pd_torque(const TaskSpec& spec, const RobotState& s) {
  constexpr double k_theta = 8.0;
  constexpr double k_theta_dot = 1.0;
  constexpr double k_x = 0.5;
  constexpr double k_v = 1.0;
  const double v_tgt =
      spec.task == Task::moving_forward ? spec.target_velocity : 0.0;
  return -(k_theta * s.theta + k_theta_dot * s.theta_dot + k_x * s.x +
           k_v * (s.v - v_tgt));
}

Dataset collect_offline(const TaskSpec& spec, int count,
                        double action_noise_std, Rng& rng) {
  if (count < 1) throw ContractViolation("collect_offline: count must be >= 1");

  Dataset ds;
  ds.state_dim = spec.obs_dim();
  ds.action_dim = 1;
  ds.items.reserve(static_cast<std::size_t>(count));

  RobotEnv env(spec, DynamicsPerturbation{});  // reference dynamics
  std::vector<double> obs = env.reset(rng);
  while (static_cast<int>(ds.items.size()) < count) {
    double torque = pd_torque(spec, env.state());
    if (action_noise_std > 0.0) torque += rng.normal(0.0, action_noise_std);
    torque = std::clamp(torque, -kMaxTorque, kMaxTorque);

    const auto outcome = env.step(torque, rng);
    Transition t;
    t.s = obs;
    t.a = {torque};
    t.r = outcome.reward;
    t.s_next = env.observe();
    t.terminal = outcome.terminated;
    t.domain = Domain::real;
    ds.items.push_back(std::move(t));

    obs = outcome.done() ? env.reset(rng) : env.observe();
  }
  return ds;
}

std::size_t dataset_record_size(int state_dim, int action_dim) {
  return static_cast<std::size_t>(2 * state_dim + action_dim + 1) * 8 + 2;
}

void dataset_save(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ContractViolation("dataset_save: cannot open " + path);

  out << kMagic << ' ' << kVersion << ' ' << ds.state_dim << ' '
      << ds.action_dim << ' ' << ds.items.size() << '\n';

  std::string buf;
  buf.reserve(dataset_record_size(ds.state_dim, ds.action_dim));
  for (const auto& t : ds.items) {
    if (static_cast<int>(t.s.size()) != ds.state_dim ||
        static_cast<int>(t.s_next.size()) != ds.state_dim ||
        static_cast<int>(t.a.size()) != ds.action_dim) {
      throw ContractViolation("dataset_save: transition dimension mismatch");
    }
    buf.clear();
    for (double v : t.s) put_f64_le(buf, v);
    for (double v : t.a) put_f64_le(buf, v);
    put_f64_le(buf, t.r);
    for (double v : t.s_next) put_f64_le(buf, v);
    buf.push_back(t.terminal ? 1 : 0);
    buf.push_back(static_cast<char>(t.domain));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw ContractViolation("dataset_save: write failed for " + path);
}

Dataset dataset_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetLoadError(DatasetLoadError::Kind::bad_header,
                           "dataset_load: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetLoadError(DatasetLoadError::Kind::bad_header,
                           "dataset_load: missing header");
  }
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  long long state_dim = 0, action_dim = 0, count = -1;
  header >> magic >> version >> state_dim >> action_dim >> count;
  if (!header || magic != kMagic || version != kVersion) {
    throw DatasetLoadError(DatasetLoadError::Kind::bad_header,
                           "dataset_load: malformed header: " + line);
  }
  if (state_dim <= 0 || action_dim <= 0 || count < 0) {
    throw DatasetLoadError(DatasetLoadError::Kind::dim_mismatch,
                           "dataset_load: invalid dimensions in header");
  }

  Dataset ds;
  ds.state_dim = static_cast<int>(state_dim);
  ds.action_dim = static_cast<int>(action_dim);
  ds.items.reserve(static_cast<std::size_t>(count));

  const std::size_t rec = dataset_record_size(ds.state_dim, ds.action_dim);
  std::vector<unsigned char> buf(rec);
  for (long long i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rec));
    if (static_cast<std::size_t>(in.gcount()) != rec) {
      throw DatasetLoadError(DatasetLoadError::Kind::truncated,
                             "dataset_load: truncated at record " +
                                 std::to_string(i));
    }
    Transition t;
    const unsigned char* p = buf.data();
    t.s.resize(ds.state_dim);
    for (auto& v : t.s) { v = get_f64_le(p); p += 8; }
    t.a.resize(ds.action_dim);
    for (auto& v : t.a) { v = get_f64_le(p); p += 8; }
    t.r = get_f64_le(p); p += 8;
    t.s_next.resize(ds.state_dim);
    for (auto& v : t.s_next) { v = get_f64_le(p); p += 8; }
    t.terminal = *p++ != 0;
    const unsigned char domain = *p++;
    if (domain > 1) {
      throw DatasetLoadError(DatasetLoadError::Kind::dim_mismatch,
                             "dataset_load: invalid domain tag");
    }
    t.domain = static_cast<Domain>(domain);
    for (double v : t.s) {
      if (!std::isfinite(v)) {
        throw DatasetLoadError(DatasetLoadError::Kind::dim_mismatch,
                               "dataset_load: non-finite state entry");
      }
    }
    ds.items.push_back(std::move(t));
  }
  // trailing bytes mean the header undercounted
  char extra;
  if (in.read(&extra, 1)) {
    throw DatasetLoadError(DatasetLoadError::Kind::truncated,
                           "dataset_load: trailing bytes after last record");
  }
  return ds;
}

}  // namespace simbridge
