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

#ifndef DPR_RANDOM_H_
#define DPR_RANDOM_H_

#include <cstdint>
#include <memory>

namespace dpr {

// Source of randomness for every noise draw in the library.
//
// The system source reads the operating system CSPRNG through libsodium.
// The deterministic source expands a 64-bit seed with the ChaCha20 stream
// cipher; it exists only so tests and the CLI test mode can reproduce
// releases byte for byte.
//
// All methods are thread-safe; concurrent callers are serialized on an
// internal mutex.
class SecureRandom {
 public:
  static SecureRandom System();
  static SecureRandom Deterministic(uint64_t seed);

  SecureRandom(SecureRandom&&) noexcept;
  SecureRandom& operator=(SecureRandom&&) noexcept;
  ~SecureRandom();

  bool deterministic() const;

  uint64_t NextUint64();

  // Fair coin.
  bool NextBit();

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double UniformDouble();

  // Uniform on (0, 1) where every representable double is reachable with
  // probability proportional to the width of the real interval it stands
  // for: the binary exponent is drawn geometrically and the 52-bit mantissa
  // uniformly. Needed by the snapping mechanism.
  double UniformFullPrecision();

 private:
  struct State;
  explicit SecureRandom(std::unique_ptr<State> state);
  std::unique_ptr<State> state_;
};

}  // namespace dpr

#endif  // DPR_RANDOM_H_
