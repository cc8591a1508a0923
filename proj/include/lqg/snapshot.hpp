#ifndef LQG_SNAPSHOT_HPP
#define LQG_SNAPSHOT_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqg/field.hpp"
#include "lqg/kernels.hpp"
#include "lqg/measure.hpp"

namespace lqg {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk state: header (magic "LQGF", version, params, grid, provenance)
// followed by optional planes. Little-endian throughout.
struct Snapshot {
  KernelParams params;
  Grid grid;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::vector<double> cumulative;               // X_N plane, may be empty
  std::vector<double> band_sigma2;              // per retained band
  std::vector<std::vector<double>> band_planes;  // optional
  std::vector<double> measure;                   // optional cell masses
  double gamma_measure = 0.0;                    // gamma the masses were built at
};

void save_snapshot(const std::string& path, const Snapshot& snap);
Snapshot load_snapshot(const std::string& path);

Snapshot snapshot_of(const FieldStack& stack, std::uint64_t seed,
                     std::uint64_t replicate);
FieldStack stack_of(const Snapshot& snap);
// requires a measure plane
LiouvilleGrid measure_of(const Snapshot& snap);

// boolean cell mask, run-length encoded, same header discipline
void save_mask_rle(const std::string& path, const Grid& grid,
                   const std::vector<std::uint8_t>& inside);
std::pair<Grid, std::vector<std::uint8_t>> load_mask_rle(
    const std::string& path);

}  // namespace lqg

#endif
