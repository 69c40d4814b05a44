#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simbridge/envs.hpp"
#include "simbridge/rng.hpp"

namespace simbridge {

enum class Domain : std::uint8_t { real = 0, sim = 1 };

std::string to_string(Domain d);

// One (s, a, r, s', done, domain) record; the atom of both the offline
// dataset and the replay buffer. `terminal` means failure termination, not
// time-limit truncation.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  std::vector<double> s_next;
  bool terminal = false;
  Domain domain = Domain::real;
};

struct Dataset {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Transition> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// Fixed-capacity ring with uniform sampling (with replacement). Insertion
// enforces the domain tag the buffer was declared for.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, Domain required);

  void insert(Transition t);  // overwrites the oldest entry beyond capacity
  // Uniform with replacement. Pointers stay valid until the next insert.
  void sample(std::size_t k, Rng& rng,
              std::vector<const Transition*>& out) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  Domain required_domain() const { return required_; }
  const Transition& at(std::size_t i) const { return items_[i]; }

 private:
  std::size_t capacity_;
  Domain required_;
  std::vector<Transition> items_;
  std::size_t cursor_ = 0;
};

// Scripted behavior controller standing in for the human operator: a noisy
// proportional-derivative law on the full internal state.
// tau = -(k_theta*theta + k_theta_dot*theta_dot + k_x*x + k_v*(v - v_tgt)).
double pd_torque(const TaskSpec& spec, const RobotState& s);

// Rolls the reference environment under the PD controller plus
// Normal(0, action_noise_std^2) torque noise, restarting episodes as they
// end, until exactly `count` transitions are recorded. All records are
// tagged Domain::real and store the clipped executed torque.
Dataset collect_offline(const TaskSpec& spec, int count,
                        double action_noise_std, Rng& rng);

// On-disk format: one text header line
//   "sbds 1 <state_dim> <action_dim> <count>\n"
// followed by fixed-width records: s, a, r, s' as little-endian 64-bit
// floats, then a terminal byte and a domain byte.
void dataset_save(const Dataset& ds, const std::string& path);
Dataset dataset_load(const std::string& path);

std::size_t dataset_record_size(int state_dim, int action_dim);

}  // namespace simbridge
