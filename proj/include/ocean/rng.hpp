#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace ocean {

/// Deterministic RNG with keyed substreams. Every random decision in the
/// library draws from a stream derived from (seed, purpose tags...), so
/// independent phases never perturb each other's sequences.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  /// Derive an independent child stream from this stream's seed and a tag path.
  Rng child(std::initializer_list<uint64_t> path) const;

  uint64_t next_u64();
  double u01();                 // [0,1)
  double normal();              // standard normal, Box-Muller
  double uniform(double lo, double hi);
  int randint(int n);           // [0,n)
  int categorical(std::span<const double> probs);
  int categorical(std::span<const float> probs);

  uint64_t seed() const { return seed_; }

  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  uint64_t seed_;
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ocean
