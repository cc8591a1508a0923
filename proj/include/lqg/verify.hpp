#ifndef LQG_VERIFY_HPP
#define LQG_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lqg {

struct CheckResult {
  int id = 0;  // acceptance criterion number
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string details;
};

enum class Profile { kQuick, kStandard, kExtended };

Profile profile_from_string(const std::string& s);

// Runs the acceptance suite. Quick covers the gamma = 0 closed-form checks;
// standard covers all fifteen criteria; extended adds gamma = 1.5 variants.
std::vector<CheckResult> run_acceptance(Profile profile, std::uint64_t seed);

}  // namespace lqg

#endif
