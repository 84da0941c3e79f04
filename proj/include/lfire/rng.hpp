#pragma once

#include <array>
#include <cstdint>

namespace lfire {

/// Counter-based generator (Philox4x32-10) keyed by a 64-bit seed. The 128-bit
/// counter is split into a 64-bit stream id and a 64-bit draw index, so two
/// generators with distinct (seed, stream) never share output and any stream
/// can be created independently of the others.
///
/// All distributions are implemented here rather than taken from <random>,
/// whose normal/Poisson algorithms are implementation defined.
class Rng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  /// Generator for a child stream; depends only on (seed, stream, child).
  [[nodiscard]] Rng split(std::uint64_t child) const noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal() noexcept;
  std::int64_t poisson(double mean);

  /// Raw Philox4x32-10 block function, exposed for known-answer tests.
  static Block philox(Block counter, std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  Block buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Deterministic mixing of stream coordinates into one 64-bit stream id.
std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) noexcept;

}  // namespace lfire
