#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rmt {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to 128
/// pseudo-random bits; no state besides the inputs.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to derive child keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// A stream is identified by (key, stream id); the n-th block of output is
/// philox(counter = [n, stream id], key). Two streams with different ids or
/// keys never share a block, so per-trial substreams obtained from one master
/// seed are independent and reproducible regardless of scheduling.
class Rng {
 public:
  using result_type = std::uint32_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(seed), stream_(stream) {}

  /// Child stream keyed by (this stream, tag). Does not advance this stream.
  Rng split(std::uint64_t tag) const noexcept {
    return Rng(mix64(key_ ^ mix64(stream_ + 0x632BE59BD9B4E019ULL * (tag + 1))), 0);
  }

  /// Stream with the same key and a different id. Used for per-trial and
  /// per-time-step substreams.
  Rng substream(std::uint64_t stream) const noexcept { return Rng(key_, stream); }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u32(); }

  std::uint32_t next_u32() noexcept {
    if (pos_ == 4) refill();
    return buffer_[pos_++];
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Box-Muller, both outputs used).
  double normal() noexcept;

  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape) noexcept;

  /// Chi distribution with `dof` degrees of freedom.
  double chi(double dof) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rmt
