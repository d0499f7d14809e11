#pragma once

#include <cstdint>
#include <random>

namespace tsimpute {

/// Mixes up to three 64-bit words into a well-dispersed stream key
/// (splitmix64 finalizer applied to a running combination).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  auto finalize = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = finalize(a);
  h = finalize(h ^ b);
  h = finalize(h ^ c);
  return h;
}

/// Seeded random stream. derive() spawns a child stream keyed purely by the
/// parent seed and the tags, so stream identity does not depend on how many
/// draws the parent has made; concurrent consumers never share an engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double normal() {
    return std::normal_distribution<double>(0.0, 1.0)(engine_);
  }

  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t seed() const { return seed_; }

  Rng derive(std::uint64_t tag_a, std::uint64_t tag_b = 0,
             std::uint64_t tag_c = 0) const {
    return Rng(mix_seed(seed_, mix_seed(tag_a, tag_b, tag_c)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace tsimpute
