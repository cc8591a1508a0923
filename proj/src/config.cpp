#include "lqg/config.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lqg {

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::ostringstream ss;
  ss.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) ss << ',';
    ss << v[i];
  }
  return ss.str();
}

}  // namespace

void RunConfig::validate() const {
  if (gamma < 0.0 || gamma >= 2.0)
    throw std::invalid_argument("gamma: need 0 <= gamma < 2");
  if (mass <= 0.0) throw std::invalid_argument("mass: need mass > 0");
  if (base <= 1.0) throw std::invalid_argument("base: need base > 1");
  if (box_side <= 0.0) throw std::invalid_argument("box_side: need > 0");
  if (grid_n == 0 || std::popcount(grid_n) != 1)
    throw std::invalid_argument("grid_n: need a power of two");
  if (bands < 0) throw std::invalid_argument("bands: need >= 0");
  if (walkers == 0) throw std::invalid_argument("walkers: need > 0");
  if (dt < 0.0) throw std::invalid_argument("dt: need >= 0");
  for (double t : t_grid)
    if (t <= 0.0) throw std::invalid_argument("t_grid: entries must be > 0");
  for (double r : radii)
    if (r <= 0.0) throw std::invalid_argument("radii: entries must be > 0");
  if (profile != "quick" && profile != "standard" && profile != "extended")
    throw std::invalid_argument("profile: quick | standard | extended");
  if (threads < 0) throw std::invalid_argument("threads: need >= 0");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "gamma") gamma = std::stod(value);
    else if (key == "mass") mass = std::stod(value);
    else if (key == "base") base = std::stod(value);
    else if (key == "box_x") box_x = std::stod(value);
    else if (key == "box_y") box_y = std::stod(value);
    else if (key == "box_side") box_side = std::stod(value);
    else if (key == "grid_n") grid_n = std::stoul(value);
    else if (key == "bands") bands = std::stoi(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "walkers") walkers = std::stoull(value);
    else if (key == "dt") dt = std::stod(value);
    else if (key == "t_grid") t_grid = parse_list(value);
    else if (key == "radii") radii = parse_list(value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "profile") profile = value;
    else if (key == "threads") threads = std::stoi(value);
    else throw std::invalid_argument("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for " + key + ": " + value);
  }
}

std::string RunConfig::serialize() const {
  std::ostringstream ss;
  ss.precision(17);
  ss << "gamma=" << gamma << "\nmass=" << mass << "\nbase=" << base
     << "\nbox_x=" << box_x << "\nbox_y=" << box_y
     << "\nbox_side=" << box_side << "\ngrid_n=" << grid_n
     << "\nbands=" << bands << "\nseed=" << seed << "\nwalkers=" << walkers
     << "\ndt=" << dt << "\nt_grid=" << join(t_grid)
     << "\nradii=" << join(radii) << "\nout_dir=" << out_dir
     << "\nprofile=" << profile << "\nthreads=" << threads << "\n";
  return ss.str();
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    try {
      cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " +
                                  e.what());
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace lqg
