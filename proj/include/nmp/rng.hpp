#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

#include "nmp/types.hpp"

namespace nmp {

// splitmix64 step, used to derive independent sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(a ^ mix_seed(b));
}

template <class... Rest>
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return mix_seed(mix_seed(a, b), rest...);
}

// Deterministic random source. All distributions are implemented here rather
// than with std:: distribution objects, whose output is implementation
// defined; with a fixed libstdc++ this keeps streams stable and serializable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  // Raw 64-bit draw, mainly for deriving child seeds.
  std::uint64_t bits() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(static_cast<double>(n) * uniform());
  }

  // Standard normal via Box-Muller, caching the spare draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform direction on the unit sphere in `dim` dimensions.
  Vec unit_vector(int dim) {
    Vec v(dim);
    double norm = 0.0;
    while (norm < 1e-12) {
      for (int i = 0; i < dim; ++i) v[i] = normal();
      norm = v.norm();
    }
    return v / norm;
  }

  Vec uniform_vector(const Vec& lo, const Vec& hi) {
    Vec v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rng& rng) {
    os << rng.engine_ << ' ' << rng.has_spare_ << ' ';
    os.precision(17);
    os << rng.spare_;
    return os;
  }

  friend std::istream& operator>>(std::istream& is, Rng& rng) {
    is >> rng.engine_ >> rng.has_spare_ >> rng.spare_;
    return is;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nmp
