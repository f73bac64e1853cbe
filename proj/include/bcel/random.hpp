// Copyright 2026 The BCEL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BCEL_RANDOM_HPP_
#define BCEL_RANDOM_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace bcel {

// Counter-based generator: the n-th draw of a stream is
// SplitMix64Mix(key + n * kGolden). A stream is fully described by its key, so
// per-trial streams are obtained with Derive() and never share state.
//
//   master seed --Derive(k)--> stream k --Derive(j)--> sub-stream (k, j)
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  static std::uint64_t Mix(std::uint64_t z);

  // Key of sub-stream `stream` of this generator. Independent of how many
  // draws were taken from this generator.
  Rng Derive(std::uint64_t stream) const;

  std::uint64_t NextU64();
  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, bound).
  int UniformInt(int bound);
  // Index drawn from an unnormalised nonnegative weight vector.
  int Categorical(std::span<const double> weights);
  // Draw from the symmetric Dirichlet(1, ..., 1), i.e. uniform on the simplex.
  std::vector<double> UniformSimplex(int dim);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Draws indices from a fixed distribution by inverse CDF with binary search.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs);
  int Sample(Rng& rng) const;

 private:
  std::vector<double> cdf_;
};

}  // namespace bcel

#endif  // BCEL_RANDOM_HPP_
