#ifndef IVAR_RNG_HPP
#define IVAR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ivar/linalg.hpp"

namespace ivar::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed of the `stream`-th independent substream of a master seed. Any
/// replication can be regenerated from (seed, stream) alone.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(derive_seed(seed, stream));
}

/// Standard normal draws via Box-Muller on 53-bit uniforms, independent of
/// the standard library's distribution implementation.
class Normal {
 public:
  double operator()(Engine& eng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform(eng);
    } while (u1 <= 0.0);
    const double u2 = uniform(eng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  static double uniform(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Mat standard_normal(Index rows, Index cols, Engine& eng) {
  Normal norm;
  Mat z(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) z(i, j) = norm(eng);
  return z;
}

}  // namespace ivar::rng

#endif  // IVAR_RNG_HPP
