#include "simbridge/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include "simbridge/errors.hpp"

namespace simbridge {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  if (v == RunConfig::kAutoEntropy) return "auto";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "auto") return RunConfig::kAutoEntropy;
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end == nullptr || *end != '\0' || v.empty()) {
    throw ConfigError("config: bad number for " + key + ": '" + v + "'");
  }
  return out;
}

// one entry per key; getters/setters go through member pointers
struct Key {
  const char* name;
  std::variant<std::string RunConfig::*, double RunConfig::*,
               long RunConfig::*, int RunConfig::*, bool RunConfig::*,
               std::uint64_t RunConfig::*>
      field;
};

const Key kKeys[] = {
    {"mode", &RunConfig::mode},
    {"task", &RunConfig::task},
    {"seed", &RunConfig::seed},
    {"total_steps", &RunConfig::total_steps},
    {"eval_every", &RunConfig::eval_every},
    {"eval_episodes", &RunConfig::eval_episodes},
    {"dataset", &RunConfig::dataset},
    {"out_dir", &RunConfig::out_dir},
    {"label", &RunConfig::label},
    {"agent.lambda", &RunConfig::lambda},
    {"agent.gamma", &RunConfig::gamma},
    {"agent.polyak", &RunConfig::polyak},
    {"agent.use_ratio", &RunConfig::use_ratio},
    {"agent.offline_fraction", &RunConfig::offline_fraction},
    {"agent.batch_size", &RunConfig::batch_size},
    {"agent.learning_rate", &RunConfig::learning_rate},
    {"agent.reward_scale", &RunConfig::reward_scale},
    {"agent.target_entropy", &RunConfig::target_entropy},
    {"agent.warmup_steps", &RunConfig::warmup_steps},
    {"agent.awr_temperature", &RunConfig::awr_temperature},
    {"agent.init_beta", &RunConfig::init_beta},
    {"backbone.kind", &RunConfig::backbone_kind},
    {"backbone.tau", &RunConfig::backbone_tau},
    {"backbone.alpha", &RunConfig::backbone_alpha},
    {"ratio.clip_low", &RunConfig::ratio_clip_low},
    {"ratio.clip_high", &RunConfig::ratio_clip_high},
    {"ratio.input_noise_std", &RunConfig::ratio_input_noise_std},
    {"perturb.gravity_scale", &RunConfig::gravity_scale},
    {"perturb.friction_scale", &RunConfig::friction_scale},
    {"perturb.mass_scale", &RunConfig::mass_scale},
    {"perturb.actuation_noise_std", &RunConfig::actuation_noise_std},
};

std::string get_value(const RunConfig& cfg, const Key& key) {
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = cfg.*member;
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      key.field);
}

void set_value(RunConfig& cfg, const Key& key, const std::string& text) {
  std::visit(
      [&](auto member) {
        auto& v = cfg.*member;
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          v = text;
        } else if constexpr (std::is_same_v<T, double>) {
          v = parse_double(key.name, text);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (text == "true" || text == "1") {
            v = true;
          } else if (text == "false" || text == "0") {
            v = false;
          } else {
            throw ConfigError(std::string("config: bad bool for ") + key.name +
                              ": '" + text + "'");
          }
        } else {
          errno = 0;
          char* end = nullptr;
          const long long parsed = std::strtoll(text.c_str(), &end, 10);
          if (end == nullptr || *end != '\0' || text.empty() || errno != 0 ||
              parsed < 0) {
            throw ConfigError(std::string("config: bad integer for ") +
                              key.name + ": '" + text + "'");
          }
          v = static_cast<T>(parsed);
        }
      },
      key.field);
}

}  // namespace

bool RunConfig::operator==(const RunConfig& other) const {
  for (const auto& key : kKeys) {
    if (get_value(*this, key) != get_value(other, key)) return false;
  }
  return true;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& k : kKeys) {
      if (key == k.name) {
        set_value(cfg, k, value);
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("config: unknown key '" + key + "' on line " +
                        std::to_string(line_no));
    }
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& key : kKeys) {
    out << key.name << " = " << get_value(cfg, key) << '\n';
  }
  return out.str();
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void save_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << serialize_config(cfg);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string text = serialize_config(cfg);
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace simbridge
