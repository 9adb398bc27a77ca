#ifndef OPERA_COMMON_HPP
#define OPERA_COMMON_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace opera {

using Point = Eigen::VectorXd;

// Ordered pair (x1, x2) in X x X.
struct PairPoint {
  Point first;
  Point second;

  PairPoint() = default;
  PairPoint(Point a, Point b) : first(std::move(a)), second(std::move(b)) {}
};

inline Point point1d(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

// Bad caller-supplied data (dimension mismatch, empty domain, ...).
struct input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad configuration (unknown key, invalid combination, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation called in a state that does not admit it.
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Deterministic random stream. mt19937_64 with hand-rolled output maps so a
// (seed, call sequence) pair yields the same doubles on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(splitmix(seed)) {}

  std::uint64_t next_u64() {
    // xorshift64* keeps the stream dependency-free and fully reproducible.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on [-half_width, half_width].
  double symmetric(double half_width) { return uniform(-half_width, half_width); }

  // Marsaglia polar method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // Index in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n; }

  int sign() { return (next_u64() & 1u) ? 1 : -1; }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    x = x ^ (x >> 31);
    return x == 0 ? 0x9E3779B97F4A7C15ULL : x;
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace opera

#endif  // OPERA_COMMON_HPP
