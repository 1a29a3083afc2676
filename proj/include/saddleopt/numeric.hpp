#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace saddleopt {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Small dense-vector helpers. Everything is 64-bit double; accumulation order
// is always sequential front-to-back so results are bit-reproducible.
// ---------------------------------------------------------------------------

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Vec& a) { return dot(a, a); }

inline double l2_norm(const Vec& a) { return std::sqrt(squared_norm(a)); }

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sub: length mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

// a += s * b
inline void add_scaled(Vec& a, double s, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add_scaled: length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

// ---------------------------------------------------------------------------
// Counter-derived random streams.
//
// Every consumer derives its own stream key from (seed, run tag, purpose), so
// adding a new consumer never shifts the draws seen by an existing one and
// results do not depend on std:: distribution internals.
// ---------------------------------------------------------------------------

namespace rng_purpose {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kSelection = 3;
}  // namespace rng_purpose

class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  // splitmix64 finalizer; full-avalanche mix used both for key derivation and
  // for the sequential generator.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t run_tag,
                                  std::uint64_t purpose) {
    return mix(seed ^ mix(run_tag ^ mix(purpose)));
  }

  std::uint64_t next_u64() { return mix(state_++); }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller (pair cached); independent of libstdc++
  // distribution implementations.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;          // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace saddleopt
