#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#define MKV_VERSION "0.1.0"

namespace mkv {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// gamma(0), exhausted step table
struct IndexError : Error {
  using Error::Error;
};

// finite step table whose partial sums never reach the requested time
struct UnreachableTimeError : Error {
  using Error::Error;
};

struct DivergenceError : Error {
  std::size_t step = 0;
  std::size_t particle = 0;
  double gamma = 0.0;
  DivergenceError(const std::string& msg, std::size_t k, std::size_t i, double g)
      : Error(msg), step(k), particle(i), gamma(g) {}
};

// non-finite values where finite ones are required
struct NumericError : Error {
  using Error::Error;
};

// dimension / size mismatches
struct ShapeError : Error {
  using Error::Error;
};

// time outside a recorded or sampled range
struct TimeRangeError : Error {
  using Error::Error;
};

// quadrature / sampling grid too coarse for the requested evaluation
struct ResolutionError : Error {
  using Error::Error;
};

// measure-grid problems: unsupported dimension, boundary mass, too-small extent
struct GridError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <class... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  detail::format_into(os, args...);
  return os.str();
}

using Vec = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

inline double dot(ConstSpan a, ConstSpan b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(ConstSpan a) { return dot(a, a); }
inline double norm(ConstSpan a) { return std::sqrt(norm_sq(a)); }

inline bool all_finite(ConstSpan a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mkv
