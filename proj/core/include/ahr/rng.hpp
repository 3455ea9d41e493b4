#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ahr {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure: output depends only on (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Named streams. A draw is addressed by (seed, component, replicate, index),
/// so chain, error, and covariate draws never share random numbers and any
/// replicate can be regenerated in isolation.
enum class StreamComponent : std::uint32_t {
  chain = 1,
  errors = 2,
  covariates = 3,
  lre = 4,
  bernstein = 5,
};

/// Counter-based generator over one named stream.
///
/// The 128-bit Philox counter is (block_lo, block_hi, component, replicate)
/// and the key is the 64-bit seed. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, StreamComponent component, std::uint32_t replicate = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller, both variates used).
  double normal();
  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  /// Student-t with nu degrees of freedom.
  double student_t(double nu);
  /// sign * U^(-1/alpha): |X| is Pareto(alpha) on [1, inf), sign is fair.
  double symmetric_pareto(double alpha);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t component_;
  std::uint32_t replicate_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// SplitMix64 finalizer; used to derive child seeds from (base, tags...).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace ahr
