#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rtge {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sub-seed of sample `index` under `master_seed`; a pure function of both.
inline constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return splitmix64(master_seed ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

// One reproducible random stream. Every draw of a sample comes from the
// engine of a single RngStream, so a sample is a pure function of its seed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  static RngStream for_index(std::uint64_t master_seed, std::uint64_t index) {
    return RngStream(derive_seed(master_seed, index));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return engine_; }

  double normal(double sd = 1.0) { return sd * normal_(engine_); }

  // Open interval (0, 1).
  double uniform_open() {
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double chi(double dof) {
    std::gamma_distribution<double> g(0.5 * dof, 2.0);
    return std::sqrt(g(engine_));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace rtge
