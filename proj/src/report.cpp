#include "lqg/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lqg::report {

std::string to_csv_header() {
  return "quantity,value,stderr,n_samples,lo,hi,seed,config_hash,aux,note";
}

std::string to_csv_row(const EstimateReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.quantity << ',' << r.value << ',' << r.stderr_ << ',' << r.n_samples
     << ',' << r.lo << ',' << r.hi << ',' << r.seed << ',' << r.config_hash
     << ',';
  bool first = true;
  for (const auto& [k, v] : r.aux) {
    if (!first) os << ';';
    os << k << '=' << v;
    first = false;
  }
  os << ',' << r.note;
  return os.str();
}

std::string to_json(const EstimateReport& r) {
  nlohmann::json j{{"quantity", r.quantity}, {"value", r.value},
                   {"stderr", r.stderr_},    {"n_samples", r.n_samples},
                   {"lo", r.lo},             {"hi", r.hi},
                   {"seed", r.seed},         {"config_hash", r.config_hash},
                   {"note", r.note}};
  for (const auto& [k, v] : r.aux) j["aux"][k] = v;
  return j.dump();
}

void write_csv(const std::string& path, const std::vector<EstimateReport>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << to_csv_header() << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

void write_json(const std::string& path,
                const std::vector<EstimateReport>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_json: cannot open " + path);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) arr.push_back(nlohmann::json::parse(to_json(r)));
  out << arr.dump(2) << '\n';
  if (!out) throw std::runtime_error("write_json: write failed for " + path);
}

}  // namespace lqg::report
