#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sleepcot {

/// Derives an independent 64-bit seed for a named sub-stream. Adding a new
/// stream name never changes the draws of an existing one.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream, std::uint64_t index);

/// mt19937_64 with distribution code written out here, since the standard
/// distributions are implementation-defined and would break cross-platform
/// reproducibility of generated corpora.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();                         // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  double normal();                          // standard normal, Box-Muller
  std::size_t index(std::size_t n);         // [0, n)

  template <typename Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      std::size_t j = index(i);
      using std::swap;
      swap(c[i - 1], c[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace sleepcot
