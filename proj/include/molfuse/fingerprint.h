// Copyright 2026 The molfuse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOLFUSE_FINGERPRINT_H_
#define MOLFUSE_FINGERPRINT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "molfuse/molgraph.h"

namespace molfuse {

inline constexpr int kDefaultFingerprintBits = 2048;
inline constexpr int kDefaultFingerprintRadius = 5;

//! 64-bit FNV-1a. All fingerprint hashing goes through this function over a
//! little-endian byte encoding, so bit positions are platform independent.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

//! Fixed-width bit set of folded environment hashes.
class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(int n_bits, int radius);

  int n_bits() const { return n_bits_; }
  int radius() const { return radius_; }

  void set(int bit) { words_[bit >> 6] |= std::uint64_t{1} << (bit & 63); }
  bool test(int bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1U; }
  int count() const;
  std::vector<int> positions() const;
  std::span<const std::uint64_t> words() const { return words_; }

  bool operator==(const Fingerprint&) const = default;

 private:
  int n_bits_ = 0;
  int radius_ = 0;
  std::vector<std::uint64_t> words_;
};

//! Unfolded environment hashes: result[t][atom] is the hash of the radius-t
//! neighborhood of `atom`, for t = 0..radius.
//!
//! t = 0 hashes (element, degree, charge, hydrogens, aromatic, in_ring).
//! Each later iteration hashes (t, own previous hash, sorted list of
//! (bond-order code, neighbor previous hash)).
std::vector<std::vector<std::uint64_t>> environment_hashes(const MolecularGraph& graph, int radius);

//! Circular fingerprint: every environment hash from every iteration,
//! folded modulo n_bits. `n_bits` must be a power of two.
Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius = kDefaultFingerprintRadius,
                               int n_bits = kDefaultFingerprintBits);

//! |A & B| / |A | B|; 1.0 when both are empty. Throws MismatchedWidth.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace molfuse

#endif  // MOLFUSE_FINGERPRINT_H_
