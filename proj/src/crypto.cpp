#include "secpm/crypto.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace secpm {

EncryptionKey EncryptionKey::from_seed(std::uint64_t seed) {
  // splitmix64 expansion
  EncryptionKey k;
  std::uint64_t x = seed;
  for (int half = 0; half < 2; ++half) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    store_le64(k.bytes.data() + 8 * half, z);
  }
  return k;
}

namespace {

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

class Aes128 final : public BlockFunction {
 public:
  explicit Aes128(const EncryptionKey& key) : key_(key), ctx_(EVP_CIPHER_CTX_new()) {
    if (!ctx_ ||
        EVP_EncryptInit_ex(ctx_.get(), EVP_aes_128_ecb(), nullptr, key_.bytes.data(), nullptr) != 1) {
      throw std::runtime_error("AES-128 context initialisation failed");
    }
    EVP_CIPHER_CTX_set_padding(ctx_.get(), 0);
  }

  void encrypt4(std::array<std::uint8_t, 64>& blocks) const override {
    int out_len = 0;
    std::array<std::uint8_t, 64> out{};
    if (EVP_EncryptUpdate(ctx_.get(), out.data(), &out_len, blocks.data(), 64) != 1 || out_len != 64) {
      throw std::runtime_error("AES-128 block encryption failed");
    }
    blocks = out;
  }

  std::unique_ptr<BlockFunction> clone() const override { return std::make_unique<Aes128>(key_); }

 private:
  EncryptionKey key_;
  std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx_;
};

}  // namespace

std::unique_ptr<BlockFunction> make_aes128(const EncryptionKey& key) {
  return std::make_unique<Aes128>(key);
}

OtpGenerator::OtpGenerator(const EncryptionKey& key) : fn_(make_aes128(key)) {}
OtpGenerator::OtpGenerator(std::unique_ptr<BlockFunction> fn) : fn_(std::move(fn)) {}
OtpGenerator::OtpGenerator(const OtpGenerator& other) : fn_(other.fn_->clone()) {}

OtpGenerator& OtpGenerator::operator=(const OtpGenerator& other) {
  if (this != &other) fn_ = other.fn_->clone();
  return *this;
}

std::array<std::uint8_t, 64> otp_message(const OtpInput& input) {
  const std::uint64_t line_number = input.line_address / kLineBytes;
  if (line_number >> 55) throw AddressError("line address too large for OTP packing");
  std::array<std::uint8_t, 64> msg{};
  for (std::uint64_t b = 0; b < 4; ++b) {
    std::uint8_t* blk = msg.data() + 16 * b;
    store_le64(blk, input.counter.major);
    const std::uint64_t lo =
        (line_number << 9) | (static_cast<std::uint64_t>(input.counter.minor & 0x7f) << 2) | b;
    store_le64(blk + 8, lo);
  }
  return msg;
}

Pad OtpGenerator::generate(const OtpInput& input) const {
  auto blocks = otp_message(input);
  fn_->encrypt4(blocks);
  Pad p;
  p.bytes = blocks;
  return p;
}

Line encrypt_line(const Line& plaintext, const Pad& pad) {
  Line out;
  for (std::size_t i = 0; i < kLineBytes; ++i) out[i] = plaintext[i] ^ pad.bytes[i];
  return out;
}

Line decrypt_line(const Line& ciphertext, const Pad& pad) { return encrypt_line(ciphertext, pad); }

}  // namespace secpm
