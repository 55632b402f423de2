#pragma once

#include <array>
#include <cstdint>
#include <memory>

#include "secpm/types.hpp"

namespace secpm {

struct EncryptionKey {
  std::array<std::uint8_t, 16> bytes{};

  static EncryptionKey from_seed(std::uint64_t seed);
  friend bool operator==(const EncryptionKey&, const EncryptionKey&) = default;
};

/// 71-bit encryption counter: 64-bit page major concatenated with a 7-bit line minor.
struct CounterValue {
  std::uint64_t major = 0;
  std::uint8_t minor = 0;

  friend auto operator<=>(const CounterValue&, const CounterValue&) = default;
};

struct OtpInput {
  Addr line_address = 0;
  CounterValue counter;

  friend auto operator<=>(const OtpInput&, const OtpInput&) = default;
};

struct Pad {
  Line bytes{};
  friend bool operator==(const Pad&, const Pad&) = default;
};

/// Keyed pseudorandom function over 128-bit blocks. Implementations must be
/// deterministic for a fixed key.
class BlockFunction {
 public:
  virtual ~BlockFunction() = default;
  /// Encrypts four independent 16-byte blocks in place.
  virtual void encrypt4(std::array<std::uint8_t, 64>& blocks) const = 0;
  virtual std::unique_ptr<BlockFunction> clone() const = 0;
};

/// AES-128 in ECB over the four message blocks (OpenSSL backend).
std::unique_ptr<BlockFunction> make_aes128(const EncryptionKey& key);

/// Produces one-time pads. Owns its block function, so each simulation
/// instance (or thread) holds its own generator.
class OtpGenerator {
 public:
  explicit OtpGenerator(const EncryptionKey& key);
  explicit OtpGenerator(std::unique_ptr<BlockFunction> fn);
  OtpGenerator(const OtpGenerator& other);
  OtpGenerator& operator=(const OtpGenerator& other);
  OtpGenerator(OtpGenerator&&) noexcept = default;
  OtpGenerator& operator=(OtpGenerator&&) noexcept = default;
  ~OtpGenerator() = default;

  Pad generate(const OtpInput& input) const;

 private:
  std::unique_ptr<BlockFunction> fn_;
};

/// Message block layout (little-endian, per 16-byte block b in 0..3):
///   bytes 0..7  : major counter
///   bytes 8..15 : line_number << 9 | minor << 2 | b
/// line_number = address / 64 must fit in 55 bits.
std::array<std::uint8_t, 64> otp_message(const OtpInput& input);

inline Pad generate_otp(const OtpGenerator& gen, const OtpInput& input) {
  return gen.generate(input);
}

Line encrypt_line(const Line& plaintext, const Pad& pad);
Line decrypt_line(const Line& ciphertext, const Pad& pad);

}  // namespace secpm
