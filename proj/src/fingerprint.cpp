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

#include "molfuse/fingerprint.h"

#include <algorithm>
#include <bit>
#include <utility>

#include "molfuse/error.h"

namespace molfuse {

namespace {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  std::uint64_t hash() const { return fnv1a64(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Fingerprint::Fingerprint(int n_bits, int radius)
    : n_bits_(n_bits), radius_(radius), words_((static_cast<std::size_t>(n_bits) + 63) / 64, 0) {}

int Fingerprint::count() const {
  int c = 0;
  for (std::uint64_t w : words_) c += std::popcount(w);
  return c;
}

std::vector<int> Fingerprint::positions() const {
  std::vector<int> out;
  for (int i = 0; i < n_bits_; ++i) {
    if (test(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> environment_hashes(const MolecularGraph& graph, int radius) {
  if (radius < 0) throw Error(ErrorCode::kInvalidArgument, "fingerprint radius must be >= 0");
  const int n = graph.num_atoms();
  std::vector<std::vector<std::uint64_t>> levels;
  levels.reserve(radius + 1);

  std::vector<std::uint64_t> current(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = graph.atoms()[i];
    ByteWriter w;
    w.u32(0);
    w.i32(static_cast<std::int32_t>(a.element));
    w.i32(graph.degree(i));
    w.i32(a.formal_charge);
    w.i32(a.implicit_h);
    w.i32(a.aromatic ? 1 : 0);
    w.i32(a.in_ring ? 1 : 0);
    current[i] = w.hash();
  }
  levels.push_back(current);

  std::vector<std::pair<std::uint32_t, std::uint64_t>> env;
  for (int t = 1; t <= radius; ++t) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      env.clear();
      for (const Neighbor& nb : graph.neighbors(i)) {
        env.emplace_back(static_cast<std::uint32_t>(graph.bonds()[nb.bond].order), current[nb.atom]);
      }
      std::sort(env.begin(), env.end());
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(t));
      w.u64(current[i]);
      w.u32(static_cast<std::uint32_t>(env.size()));
      for (const auto& [code, h] : env) {
        w.u32(code);
        w.u64(h);
      }
      next[i] = w.hash();
    }
    current = std::move(next);
    levels.push_back(current);
  }
  return levels;
}

Fingerprint morgan_fingerprint(const MolecularGraph& graph, int radius, int n_bits) {
  if (n_bits <= 0 || !std::has_single_bit(static_cast<unsigned>(n_bits))) {
    throw Error(ErrorCode::kInvalidArgument, "fingerprint width must be a power of two");
  }
  Fingerprint fp(n_bits, radius);
  for (const auto& level : environment_hashes(graph, radius)) {
    for (std::uint64_t h : level) fp.set(static_cast<int>(h % static_cast<std::uint64_t>(n_bits)));
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.n_bits() != b.n_bits()) throw Error(ErrorCode::kMismatchedWidth, "fingerprints differ in width");
  int inter = 0;
  int uni = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    inter += std::popcount(a.words()[i] & b.words()[i]);
    uni += std::popcount(a.words()[i] | b.words()[i]);
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace molfuse
