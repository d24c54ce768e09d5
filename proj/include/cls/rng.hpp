#ifndef CLS_RNG_HPP
#define CLS_RNG_HPP

#include <cstdint>
#include <random>

namespace cls {

// Seedable generator wrapping mt19937_64. Uniform variates are derived from
// raw 64-bit draws by fixed arithmetic, so sequences are identical across
// platforms and standard libraries. The algorithm id goes into run
// metadata.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on (0, 1]; never returns 0, so ln() stays finite.
  double unit_positive() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Uniform integer in [0, n); n must be positive. Unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cls

#endif
