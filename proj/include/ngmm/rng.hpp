#ifndef NGMM_RNG_HPP
#define NGMM_RNG_HPP

#include <cstdint>
#include <random>

namespace ngmm {

// Owned random stream. One instance per chain / per replicate; never shared
// across threads. Substreams are derived from the original seed so that
// replicate k always sees the same stream regardless of evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
  }

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

  // Gamma(shape, rate): mean shape/rate.
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(gen_);
  }

  std::uint64_t integer() { return gen_(); }

  std::uint64_t seed() const { return seed_; }

  Rng substream(std::uint64_t index) const {
    return Rng(mix(seed_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
  }

 private:
  // splitmix64 finalizer; decorrelates nearby seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace ngmm

#endif
