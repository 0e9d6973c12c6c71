#include "mkv/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace mkv {

namespace {

void put_bytes(std::ofstream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}

void put_u64(std::ofstream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 8);
}

void put_f64(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(os, bits);
}

void get_bytes(std::ifstream& is, void* p, std::size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw IoError(cat("truncated file while reading ", what));
}

std::uint32_t get_u32(std::ifstream& is, const char* what) {
  unsigned char b[4];
  get_bytes(is, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::ifstream& is, const char* what) {
  unsigned char b[8];
  get_bytes(is, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::ifstream& is, const char* what) {
  const std::uint64_t bits = get_u64(is, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void check_magic(std::ifstream& is, const char* magic, const std::filesystem::path& path) {
  char got[4];
  get_bytes(is, got, 4, "magic");
  if (std::memcmp(got, magic, 4) != 0)
    throw IoError(cat(path.string(), ": bad magic, expected ", magic));
}

constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void write_trajectory(const std::filesystem::path& path, const TrajectoryStore& store) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(cat("cannot open ", path.string(), " for writing"));
  put_bytes(os, "MKVT", 4);
  put_u32(os, kFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(store.n));
  put_u32(os, static_cast<std::uint32_t>(store.d));
  put_u64(os, store.times.size());
  for (std::size_t r = 0; r < store.times.size(); ++r) {
    put_f64(os, store.times[r]);
    const double* row = store.positions.data() + r * store.n * store.d;
    for (std::size_t i = 0; i < store.n * store.d; ++i) put_f64(os, row[i]);
  }
  if (!os) throw IoError(cat("write failed on ", path.string()));
}

TrajectoryStore read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(cat("cannot open ", path.string()));
  check_magic(is, "MKVT", path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kFormatVersion)
    throw IoError(cat(path.string(), ": unsupported version ", version));
  TrajectoryStore store;
  store.n = get_u32(is, "n");
  store.d = get_u32(is, "d");
  const std::uint64_t count = get_u64(is, "count");
  store.times.resize(count);
  store.positions.resize(count * store.n * store.d);
  for (std::uint64_t r = 0; r < count; ++r) {
    store.times[r] = get_f64(is, "time");
    for (std::size_t i = 0; i < store.n * store.d; ++i)
      store.positions[r * store.n * store.d + i] = get_f64(is, "positions");
  }
  return store;
}

WeightedSampleMeasure read_trajectory_slice(const std::filesystem::path& path,
                                            std::ptrdiff_t index) {
  const TrajectoryStore store = read_trajectory(path);
  const auto count = static_cast<std::ptrdiff_t>(store.times.size());
  if (count == 0) throw IoError(cat(path.string(), ": no records"));
  std::ptrdiff_t idx = index >= 0 ? index : count + index;
  if (idx < 0 || idx >= count)
    throw IoError(cat(path.string(), ": slice index ", index, " out of ", count, " records"));
  const std::size_t block = store.n * store.d;
  Vec pts(store.positions.begin() + idx * static_cast<std::ptrdiff_t>(block),
          store.positions.begin() + (idx + 1) * static_cast<std::ptrdiff_t>(block));
  return WeightedSampleMeasure::uniform(store.d, std::move(pts));
}

void write_grid(const std::filesystem::path& path, const MeasureGrid& grid) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(cat("cannot open ", path.string(), " for writing"));
  put_bytes(os, "MKVG", 4);
  put_u32(os, kFormatVersion);
  put_u32(os, static_cast<std::uint32_t>(grid.spec.d));
  for (std::size_t a = 0; a < grid.spec.d; ++a)
    put_u32(os, static_cast<std::uint32_t>(grid.spec.extent[a]));
  for (std::size_t a = 0; a < grid.spec.d; ++a) put_f64(os, grid.spec.lower[a]);
  put_f64(os, grid.spec.h);
  for (double v : grid.density) put_f64(os, v);
  if (!os) throw IoError(cat("write failed on ", path.string()));
}

MeasureGrid read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(cat("cannot open ", path.string()));
  check_magic(is, "MKVG", path);
  const std::uint32_t version = get_u32(is, "version");
  if (version != kFormatVersion)
    throw IoError(cat(path.string(), ": unsupported version ", version));
  GridSpec spec;
  spec.d = get_u32(is, "d");
  if (spec.d == 0 || spec.d > 2) throw IoError(cat(path.string(), ": bad dimension ", spec.d));
  spec.extent.resize(spec.d);
  for (std::size_t a = 0; a < spec.d; ++a) spec.extent[a] = get_u32(is, "extent");
  spec.lower.resize(spec.d);
  for (std::size_t a = 0; a < spec.d; ++a) spec.lower[a] = get_f64(is, "lower");
  spec.h = get_f64(is, "h");
  Vec values(spec.cells());
  for (double& v : values) v = get_f64(is, "density");
  return MeasureGrid(std::move(spec), std::move(values));
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(cat("cannot open ", path.string()));
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[65536];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(out);
}

}  // namespace mkv
