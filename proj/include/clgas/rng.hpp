#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace clgas {

/// Philox4x32-10 block function (Salmon et al., SC'11).
/// Pure: the same (counter, key) always yields the same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based stream. Key is the 64-bit seed; the counter space is
/// split by a 64-bit stream id so `StreamRng(seed, k)` for distinct k are
/// independent and need no coordination between threads.
class StreamRng {
 public:
  StreamRng() : StreamRng(0, 0) {}
  StreamRng(std::uint64_t seed, std::uint64_t stream);

  /// Child stream, e.g. one per replica.
  StreamRng split(std::uint64_t child) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out, double scale = 1.0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Fixed-size little-endian serialization of the full generator state.
  std::vector<std::uint8_t> serialize() const;
  static StreamRng deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const StreamRng&) const = default;

 private:
  void refill();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;  // next block index to generate
  std::array<std::uint32_t, 4> buffer_{};
  std::uint32_t lane_ = 4;  // 4 == buffer empty
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace clgas
