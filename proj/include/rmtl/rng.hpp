#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rmtl {

/// Seedable random stream keyed by (master_seed, stream_index).
///
/// Streams with equal keys produce identical sequences; distinct stream
/// indices give statistically independent sequences.  Resampling loops give
/// replicate b the stream index b, so results do not depend on scheduling.
/// Internally a xoshiro256++ generator seeded through SplitMix64.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  /// Hashes (seed, salt) into a fresh seed for nested resampling contexts.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal draw (Box-Muller, one spare cached per stream).
  double normal();

  double exponential(double rate);
  double uniform(double lo, double hi);

  /// Uniform integer on [0, n); unbiased via rejection.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// dim independent N(0,1) draws from the stream.
Eigen::VectorXd standard_normal_vector(int dim, RngStream& rng);

}  // namespace rmtl
