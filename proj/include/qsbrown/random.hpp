#pragma once

#include <array>
#include <cstdint>

namespace qsb {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive independent seeds from (seed, tag).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

/// Purpose tags that keep a path's initial-condition draws and its Brownian
/// increments on disjoint counter ranges.
enum class StreamPurpose : std::uint32_t { InitialCondition = 1, Noise = 2, Sampling = 3 };

/// Counter-based random stream addressed by (seed, stream id, purpose).
///
/// Draw n of stream (s, id, p) is a pure function of (s, id, p, n), so
/// results never depend on how streams are distributed over threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id,
               StreamPurpose purpose = StreamPurpose::Sampling);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller, pairs cached).
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qsb
