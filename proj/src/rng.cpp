#include "clgas/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "clgas/error.hpp"

namespace clgas {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr std::size_t kSerializedSize = 8 + 8 + 8 + 16 + 4 + 1 + 8;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& ctr,
                                                 const std::array<std::uint32_t, 2>& key) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, ctr[0], hi0, lo0);
  mulhilo(kMul1, ctr[2], hi1, lo1);
  return {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(in[pos + i]) << (8 * i);
  }
  pos += sizeof(T);
  return value;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  counter = philox_round(counter, key);
  for (int round = 1; round < 10; ++round) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    counter = philox_round(counter, key);
  }
  return counter;
}

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

StreamRng StreamRng::split(std::uint64_t child) const {
  // Mix parent stream and child index through one Philox block so nested
  // splits cannot collide with flat stream ids.
  const auto mixed = philox4x32({static_cast<std::uint32_t>(child),
                                 static_cast<std::uint32_t>(child >> 32),
                                 static_cast<std::uint32_t>(stream_),
                                 static_cast<std::uint32_t>(stream_ >> 32)},
                                {0x5eed5eedu, 0x0badcafeu});
  const std::uint64_t id = (static_cast<std::uint64_t>(mixed[1]) << 32) | mixed[0];
  return StreamRng(seed_, id);
}

void StreamRng::refill() {
  buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                       {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  ++block_;
  lane_ = 0;
}

std::uint32_t StreamRng::next_u32() {
  if (lane_ >= 4) refill();
  return buffer_[lane_++];
}

std::uint64_t StreamRng::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double StreamRng::uniform() {
  // 53 random bits, centred in their cell so 0 and 1 are unreachable.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double StreamRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void StreamRng::fill_normal(std::span<double> out, double scale) {
  for (double& x : out) x = scale * normal();
}

std::vector<std::uint8_t> StreamRng::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(kSerializedSize);
  put_le(out, seed_);
  put_le(out, stream_);
  put_le(out, block_);
  for (auto word : buffer_) put_le(out, word);
  put_le(out, lane_);
  out.push_back(has_spare_ ? 1 : 0);
  put_le(out, std::bit_cast<std::uint64_t>(spare_));
  return out;
}

StreamRng StreamRng::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kSerializedSize) {
    throw Error(ErrorKind::FormatError, "rng state has " + std::to_string(bytes.size()) +
                                            " bytes, expected " + std::to_string(kSerializedSize));
  }
  std::size_t pos = 0;
  StreamRng rng;
  rng.seed_ = get_le<std::uint64_t>(bytes, pos);
  rng.stream_ = get_le<std::uint64_t>(bytes, pos);
  rng.block_ = get_le<std::uint64_t>(bytes, pos);
  for (auto& word : rng.buffer_) word = get_le<std::uint32_t>(bytes, pos);
  rng.lane_ = get_le<std::uint32_t>(bytes, pos);
  rng.has_spare_ = bytes[pos++] != 0;
  rng.spare_ = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  if (rng.lane_ > 4) throw Error(ErrorKind::FormatError, "rng lane out of range");
  return rng;
}

}  // namespace clgas
