#include <doctest.h>

#include <openssl/evp.h>

#include <random>
#include <set>

#include "secpm/crypto.hpp"

using namespace secpm;

namespace {

Line random_line(std::mt19937_64& rng) {
  Line l;
  for (auto& b : l) b = static_cast<std::uint8_t>(rng());
  return l;
}

// Straight AES-128-ECB over `in`, independent of the simulator's wrapper.
std::array<std::uint8_t, 64> aes_ecb(const EncryptionKey& key, const std::array<std::uint8_t, 64>& in) {
  std::array<std::uint8_t, 64> out{};
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  int len = 0;
  EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.bytes.data(), nullptr);
  EVP_CIPHER_CTX_set_padding(ctx, 0);
  EVP_EncryptUpdate(ctx, out.data(), &len, in.data(), 64);
  EVP_CIPHER_CTX_free(ctx);
  return out;
}

}  // namespace

TEST_SUITE("crypto") {
  TEST_CASE("aes backend matches the FIPS-197 vector") {
    EncryptionKey k;
    for (int i = 0; i < 16; ++i) k.bytes[i] = static_cast<std::uint8_t>(i);
    const std::uint8_t pt[16] = {0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77,
                                 0x88, 0x99, 0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff};
    const std::uint8_t ct[16] = {0x69, 0xc4, 0xe0, 0xd8, 0x6a, 0x7b, 0x04, 0x30,
                                 0xd8, 0xcd, 0xb7, 0x80, 0x70, 0xb4, 0xc5, 0x5a};
    std::array<std::uint8_t, 64> blocks{};
    for (int b = 0; b < 4; ++b) std::copy(pt, pt + 16, blocks.begin() + 16 * b);
    make_aes128(k)->encrypt4(blocks);
    for (int b = 0; b < 4; ++b) CHECK(std::equal(ct, ct + 16, blocks.begin() + 16 * b));
  }

  TEST_CASE("pad is AES over the documented message packing") {
    const EncryptionKey k = EncryptionKey::from_seed(42);
    const OtpInput in{0x12340, {0x0102030405060708ULL, 93}};
    std::array<std::uint8_t, 64> msg{};
    const std::uint64_t line_number = 0x12340 / 64;
    for (std::uint64_t b = 0; b < 4; ++b) {
      for (int i = 0; i < 8; ++i) msg[16 * b + i] = static_cast<std::uint8_t>(in.counter.major >> (8 * i));
      const std::uint64_t lo = line_number << 9 | 93ULL << 2 | b;
      for (int i = 0; i < 8; ++i) msg[16 * b + 8 + i] = static_cast<std::uint8_t>(lo >> (8 * i));
    }
    CHECK(otp_message(in) == msg);
    CHECK(OtpGenerator(k).generate(in).bytes == aes_ecb(k, msg));
  }

  TEST_CASE("generate_otp is deterministic and 64 bytes") {
    OtpGenerator g(EncryptionKey::from_seed(1));
    const OtpInput in{4096, {3, 9}};
    CHECK(generate_otp(g, in) == generate_otp(g, in));
    CHECK(sizeof(Pad::bytes) == 64);
    OtpGenerator copy = g;
    CHECK(copy.generate(in) == g.generate(in));
  }

  TEST_CASE("neighbouring counters, addresses and keys give different pads") {
    OtpGenerator g(EncryptionKey::from_seed(1));
    const Pad base = g.generate({4096, {3, 9}});
    CHECK(base != g.generate({4096, {3, 10}}));
    CHECK(base != g.generate({4096, {4, 9}}));
    CHECK(base != g.generate({4160, {3, 9}}));
    CHECK(base != OtpGenerator(EncryptionKey::from_seed(2)).generate({4096, {3, 9}}));
    // the four 16-byte blocks of one pad differ (block index is mixed in)
    std::set<std::array<std::uint8_t, 16>> blocks;
    for (int b = 0; b < 4; ++b) {
      std::array<std::uint8_t, 16> x;
      std::copy(base.bytes.begin() + 16 * b, base.bytes.begin() + 16 * (b + 1), x.begin());
      blocks.insert(x);
    }
    CHECK(blocks.size() == 4);
  }

  TEST_CASE("xor encryption identities") {
    std::mt19937_64 rng(5);
    const Pad p{random_line(rng)};
    CHECK(encrypt_line(kZeroLine, p) == p.bytes);
    CHECK(decrypt_line(kZeroLine, p) == p.bytes);
    const Line x = random_line(rng);
    Line y = x;
    y[7] ^= 0x10;
    y[60] ^= 0x01;
    CHECK(encrypt_line(encrypt_line(x, p), p) == x);
    const Line cx = encrypt_line(x, p), cy = encrypt_line(y, p);
    for (std::size_t i = 0; i < kLineBytes; ++i) CHECK((cx[i] != cy[i]) == (x[i] != y[i]));
  }

  TEST_CASE("wrong pad does not decrypt") {
    OtpGenerator g(EncryptionKey::from_seed(3));
    std::mt19937_64 rng(8);
    const Line x = random_line(rng);
    const Line c = encrypt_line(x, g.generate({0, {1, 1}}));
    CHECK(decrypt_line(c, g.generate({0, {1, 2}})) != x);
    CHECK(decrypt_line(c, g.generate({0, {1, 1}})) == x);
  }

  TEST_CASE("oversized line numbers are rejected") {
    CHECK_THROWS_AS(otp_message({1ULL << 62, {0, 1}}), AddressError);
  }
}
