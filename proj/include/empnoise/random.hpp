#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

namespace empnoise {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Deterministic counter-based random stream.
///
/// The 64-bit seed is the Philox key; the 128-bit counter holds the block
/// index in its low 64 bits and `stream_id` in its high 64 bits. Every
/// (seed, stream_id) pair therefore names an independent stream, and draws
/// never depend on platform library distributions.
///
/// Normals use Box-Muller on 53-bit uniforms; Student-t uses z * sqrt(nu / w)
/// with w a sum of nu squared normals.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Chi-square with integer degrees of freedom.
  double chi_square(int dof);
  double student_t(int dof);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 64-bit words left in buffer_
  std::optional<double> spare_normal_;
};

/// Stream id built from a purpose tag and two indices, so that different
/// uses of one seed never share a stream.
constexpr std::uint64_t stream_id(std::uint32_t purpose, std::uint32_t a, std::uint32_t b = 0) {
  return (static_cast<std::uint64_t>(purpose) << 48) ^ (static_cast<std::uint64_t>(a) << 24) ^ b;
}

}  // namespace empnoise
