#ifndef LQG_CONFIG_HPP
#define LQG_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lqg {

// Flat key=value run configuration; every field has a usable default.
struct RunConfig {
  double gamma = 1.0;
  double mass = 1.0;
  double base = 2.0;  // cutoff base a_n = base^n
  double box_x = 0.0;
  double box_y = 0.0;
  double box_side = 1.0;
  std::uint32_t grid_n = 256;
  int bands = 0;  // 0: derive from grid spacing
  std::uint64_t seed = 1;
  std::uint64_t walkers = 1000;
  double dt = 0.0;  // 0: per-op default
  std::vector<double> t_grid = {0.01, 0.02, 0.05, 0.1};
  std::vector<double> radii = {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8};
  std::string out_dir = ".";
  std::string profile = "standard";  // quick | standard | extended
  int threads = 0;                   // 0: environment default

  void validate() const;  // throws invalid_argument with the offending key
  std::string serialize() const;
  std::uint64_t hash() const;  // FNV-1a of the canonical serialization
  // "key=value"; unknown key or bad value throws invalid_argument
  void set(const std::string& key, const std::string& value);
};

// Parses a key=value file ('#' comments); errors carry the line number.
RunConfig load_config(const std::string& path);

}  // namespace lqg

#endif
