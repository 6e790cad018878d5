// Copyright 2026 The dpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpr/random.h"

#include <sodium.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace dpr {
namespace {

constexpr size_t kBufferSize = 4096;

void EnsureSodium() {
  static const int init = sodium_init();
  if (init < 0) throw std::runtime_error("libsodium initialization failed");
}

}  // namespace

struct SecureRandom::State {
  std::mutex mu;
  bool deterministic = false;
  std::array<unsigned char, crypto_stream_chacha20_KEYBYTES> key{};
  uint64_t block_counter = 0;
  std::array<unsigned char, kBufferSize> buffer{};
  size_t pos = kBufferSize;
  uint64_t bits = 0;
  int bits_left = 0;

  void Refill() {
    if (deterministic) {
      std::array<unsigned char, crypto_stream_chacha20_NONCEBYTES> nonce{};
      std::memcpy(nonce.data(), &block_counter, sizeof(block_counter));
      ++block_counter;
      crypto_stream_chacha20(buffer.data(), buffer.size(), nonce.data(),
                             key.data());
    } else {
      randombytes_buf(buffer.data(), buffer.size());
    }
    pos = 0;
  }

  uint64_t Next() {
    if (pos + sizeof(uint64_t) > buffer.size()) Refill();
    uint64_t out;
    std::memcpy(&out, buffer.data() + pos, sizeof(out));
    pos += sizeof(out);
    return out;
  }
};

SecureRandom::SecureRandom(std::unique_ptr<State> state)
    : state_(std::move(state)) {}
SecureRandom::SecureRandom(SecureRandom&&) noexcept = default;
SecureRandom& SecureRandom::operator=(SecureRandom&&) noexcept = default;
SecureRandom::~SecureRandom() = default;

SecureRandom SecureRandom::System() {
  EnsureSodium();
  return SecureRandom(std::make_unique<State>());
}

SecureRandom SecureRandom::Deterministic(uint64_t seed) {
  EnsureSodium();
  auto state = std::make_unique<State>();
  state->deterministic = true;
  unsigned char seed_bytes[sizeof(seed)];
  std::memcpy(seed_bytes, &seed, sizeof(seed));
  crypto_generichash(state->key.data(), state->key.size(), seed_bytes,
                     sizeof(seed_bytes), nullptr, 0);
  return SecureRandom(std::move(state));
}

bool SecureRandom::deterministic() const { return state_->deterministic; }

uint64_t SecureRandom::NextUint64() {
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->Next();
}

bool SecureRandom::NextBit() {
  std::lock_guard<std::mutex> lock(state_->mu);
  if (state_->bits_left == 0) {
    state_->bits = state_->Next();
    state_->bits_left = 64;
  }
  const bool bit = state_->bits & 1u;
  state_->bits >>= 1;
  --state_->bits_left;
  return bit;
}

double SecureRandom::UniformDouble() {
  const uint64_t word = NextUint64() >> 11;
  return (static_cast<double>(word) + 0.5) * 0x1p-53;
}

double SecureRandom::UniformFullPrecision() {
  std::lock_guard<std::mutex> lock(state_->mu);
  int exponent = -1;
  while (true) {
    const uint64_t word = state_->Next();
    if (word != 0) {
      exponent -= std::countl_zero(word);
      break;
    }
    exponent -= 64;
    // Below the subnormal range every remaining outcome rounds to the
    // smallest positive double.
    if (exponent < -1074) return std::numeric_limits<double>::denorm_min();
  }
  const uint64_t mantissa = state_->Next() >> 12;
  return std::ldexp(1.0 + static_cast<double>(mantissa) * 0x1p-52, exponent);
}

}  // namespace dpr
