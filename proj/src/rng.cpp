#include "ocean/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ocean {

namespace {
inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), state_(seed) {
  // burn a few outputs so nearby seeds decorrelate
  for (int i = 0; i < 4; ++i) splitmix64(state_);
}

uint64_t Rng::mix(uint64_t a, uint64_t b) {
  uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  splitmix64(x);
  return splitmix64(x);
}

Rng Rng::child(std::initializer_list<uint64_t> path) const {
  uint64_t s = seed_;
  for (uint64_t t : path) s = mix(s, t);
  return Rng(s);
}

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::u01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * u01() - 1.0;
    v = 2.0 * u01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * m;
  have_spare_ = true;
  return u * m;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

int Rng::randint(int n) {
  if (n <= 0) throw std::invalid_argument("randint: n must be positive");
  // rejection sampling to avoid modulo bias
  uint64_t limit = UINT64_MAX - UINT64_MAX % static_cast<uint64_t>(n);
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % static_cast<uint64_t>(n));
}

template <class T>
static int categorical_impl(Rng& rng, std::span<const T> probs) {
  if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
  double u = rng.u01();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += static_cast<double>(probs[i]);
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

int Rng::categorical(std::span<const double> probs) { return categorical_impl(*this, probs); }
int Rng::categorical(std::span<const float> probs) { return categorical_impl(*this, probs); }

}  // namespace ocean
