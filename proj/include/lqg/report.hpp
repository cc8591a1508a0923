#ifndef LQG_REPORT_HPP
#define LQG_REPORT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lqg::report {

// A statistical estimate with provenance; serializes to a CSV row
// (quantity, value, stderr, n_samples, lo, hi) plus auxiliary fields, and to
// JSON for fit-style outputs.
struct EstimateReport {
  std::string quantity;
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t n_samples = 0;
  double lo = 0.0;  // value - 2 SE unless set otherwise
  double hi = 0.0;
  std::map<std::string, double> aux;
  std::string note;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  void set_interval() {
    lo = value - 2.0 * stderr_;
    hi = value + 2.0 * stderr_;
  }
};

std::string to_csv_header();
std::string to_csv_row(const EstimateReport& r);
std::string to_json(const EstimateReport& r);

void write_csv(const std::string& path, const std::vector<EstimateReport>& rows);
void write_json(const std::string& path, const std::vector<EstimateReport>& rows);

}  // namespace lqg::report

#endif
