#include "lqg/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace lqg {

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'L', 'Q', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindField = 0;
constexpr std::uint32_t kKindMask = 1;

constexpr std::uint32_t kHasCumulative = 1;
constexpr std::uint32_t kHasBands = 2;
constexpr std::uint32_t kHasMeasure = 4;

struct Writer {
  std::string buf;
  template <class T>
  void put(const T& v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf.append(p, sizeof(T));
  }
  void put_doubles(const std::vector<double>& v) {
    buf.append(reinterpret_cast<const char*>(v.data()), v.size() * 8);
  }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  template <class T>
  T get() {
    if (pos + sizeof(T) > buf.size())
      throw CorruptionError("snapshot truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::vector<double> get_doubles(std::size_t n) {
    if (pos + 8 * n > buf.size()) throw CorruptionError("snapshot truncated");
    std::vector<double> v(n);
    std::memcpy(v.data(), buf.data() + pos, 8 * n);
    pos += 8 * n;
    return v;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  return buf;
}

void write_file(const std::string& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(buf.data(), buf.size());
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint32_t check_header(Reader& r, std::uint32_t expected_kind) {
  char magic[4];
  for (char& c : magic) c = r.get<char>();
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic: not a snapshot file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw FormatError("unsupported snapshot version " +
                      std::to_string(version));
  const auto kind = r.get<std::uint32_t>();
  if (kind != expected_kind) throw FormatError("unexpected snapshot kind");
  return kind;
}

void put_header(Writer& w, std::uint32_t kind) {
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put(kind);
}

Grid get_grid(Reader& r) {
  Grid g;
  g.origin.x = r.get<double>();
  g.origin.y = r.get<double>();
  g.side = r.get<double>();
  g.n = r.get<std::uint32_t>();
  if (g.side <= 0 || g.n == 0) throw CorruptionError("bad grid header");
  return g;
}

void put_grid(Writer& w, const Grid& g) {
  w.put(g.origin.x);
  w.put(g.origin.y);
  w.put(g.side);
  w.put(std::uint32_t(g.n));
}

}  // namespace

void save_snapshot(const std::string& path, const Snapshot& snap) {
  snap.params.validate();
  Writer w;
  put_header(w, kKindField);
  w.put(snap.params.mass);
  w.put(snap.params.gamma);
  w.put(std::uint32_t(snap.params.cutoffs.size()));
  w.put_doubles(snap.params.cutoffs);
  put_grid(w, snap.grid);
  w.put(snap.seed);
  w.put(snap.replicate);
  std::uint32_t flags = 0;
  if (!snap.cumulative.empty()) flags |= kHasCumulative;
  if (!snap.band_planes.empty()) flags |= kHasBands;
  if (!snap.measure.empty()) flags |= kHasMeasure;
  w.put(flags);
  const std::size_t cells = snap.grid.cell_count();
  if (flags & kHasCumulative) {
    if (snap.cumulative.size() != cells)
      throw std::invalid_argument("save_snapshot: cumulative plane size");
    w.put_doubles(snap.cumulative);
  }
  if (flags & kHasBands) {
    if (snap.band_planes.size() != snap.band_sigma2.size())
      throw std::invalid_argument("save_snapshot: band plane/sigma2 mismatch");
    w.put(std::uint32_t(snap.band_planes.size()));
    for (std::size_t b = 0; b < snap.band_planes.size(); ++b) {
      if (snap.band_planes[b].size() != cells)
        throw std::invalid_argument("save_snapshot: band plane size");
      w.put(snap.band_sigma2[b]);
      w.put_doubles(snap.band_planes[b]);
    }
  }
  if (flags & kHasMeasure) {
    if (snap.measure.size() != cells)
      throw std::invalid_argument("save_snapshot: measure plane size");
    w.put(snap.gamma_measure);
    w.put_doubles(snap.measure);
  }
  write_file(path, w.buf);
}

Snapshot load_snapshot(const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf};
  check_header(r, kKindField);
  Snapshot snap;
  snap.params.mass = r.get<double>();
  snap.params.gamma = r.get<double>();
  const auto nc = r.get<std::uint32_t>();
  if (nc < 2 || nc > 64) throw CorruptionError("bad cutoff count");
  snap.params.cutoffs = r.get_doubles(nc);
  snap.params.validate();
  snap.grid = get_grid(r);
  snap.seed = r.get<std::uint64_t>();
  snap.replicate = r.get<std::uint64_t>();
  const auto flags = r.get<std::uint32_t>();
  const std::size_t cells = snap.grid.cell_count();
  if (flags & kHasCumulative) snap.cumulative = r.get_doubles(cells);
  if (flags & kHasBands) {
    const auto nb = r.get<std::uint32_t>();
    if (int(nb) > snap.params.band_count())
      throw CorruptionError("band plane count exceeds header bands");
    for (std::uint32_t b = 0; b < nb; ++b) {
      snap.band_sigma2.push_back(r.get<double>());
      snap.band_planes.push_back(r.get_doubles(cells));
    }
  }
  if (flags & kHasMeasure) {
    snap.gamma_measure = r.get<double>();
    snap.measure = r.get_doubles(cells);
  }
  if (r.pos != buf.size())
    throw CorruptionError("trailing bytes after snapshot body");
  return snap;
}

Snapshot snapshot_of(const FieldStack& stack, std::uint64_t seed,
                     std::uint64_t replicate) {
  Snapshot snap;
  snap.params = stack.params;
  snap.grid = stack.grid;
  snap.seed = seed;
  snap.replicate = replicate;
  snap.cumulative = stack.cumulative;
  for (const auto& b : stack.bands) {
    snap.band_sigma2.push_back(b.sigma2);
    snap.band_planes.push_back(b.values);
  }
  return snap;
}

FieldStack stack_of(const Snapshot& snap) {
  if (snap.cumulative.empty())
    throw std::invalid_argument("stack_of: snapshot has no field plane");
  FieldStack stack;
  stack.params = snap.params;
  stack.grid = snap.grid;
  stack.cumulative = snap.cumulative;
  stack.variance = total_variance(snap.params);
  for (std::size_t b = 0; b < snap.band_planes.size(); ++b)
    stack.bands.push_back(BandField{int(b) + 1, snap.grid,
                                    snap.band_planes[b], snap.band_sigma2[b]});
  return stack;
}

LiouvilleGrid measure_of(const Snapshot& snap) {
  if (snap.measure.empty())
    throw std::invalid_argument("measure_of: snapshot has no measure plane");
  LiouvilleGrid m;
  m.grid = snap.grid;
  m.gamma = snap.gamma_measure;
  m.band_count = snap.params.band_count();
  m.variance = total_variance(snap.params);
  m.mass = snap.measure;
  m.total = 0.0;
  for (double v : m.mass) m.total += v;
  return m;
}

void save_mask_rle(const std::string& path, const Grid& grid,
                   const std::vector<std::uint8_t>& inside) {
  if (inside.size() != std::size_t(grid.cell_count()))
    throw std::invalid_argument("save_mask_rle: size mismatch");
  Writer w;
  put_header(w, kKindMask);
  put_grid(w, grid);
  // alternating run lengths, starting with a (possibly zero) run of 0s
  std::vector<std::uint64_t> runs;
  std::uint8_t cur = 0;
  std::uint64_t len = 0;
  for (auto v : inside) {
    if ((v != 0) == (cur != 0)) {
      ++len;
    } else {
      runs.push_back(len);
      cur = v;
      len = 1;
    }
  }
  runs.push_back(len);
  w.put(std::uint64_t(runs.size()));
  for (auto rl : runs) w.put(rl);
  write_file(path, w.buf);
}

std::pair<Grid, std::vector<std::uint8_t>> load_mask_rle(
    const std::string& path) {
  const std::string buf = read_file(path);
  Reader r{buf};
  check_header(r, kKindMask);
  const Grid grid = get_grid(r);
  const auto nruns = r.get<std::uint64_t>();
  std::vector<std::uint8_t> inside;
  inside.reserve(grid.cell_count());
  std::uint8_t cur = 0;
  for (std::uint64_t k = 0; k < nruns; ++k) {
    const auto len = r.get<std::uint64_t>();
    if (inside.size() + len > std::size_t(grid.cell_count()))
      throw CorruptionError("mask runs exceed grid size");
    inside.insert(inside.end(), len, cur);
    cur = !cur;
  }
  if (inside.size() != std::size_t(grid.cell_count()))
    throw CorruptionError("mask runs do not cover the grid");
  if (r.pos != buf.size())
    throw CorruptionError("trailing bytes after mask body");
  return {grid, inside};
}

}  // namespace lqg
