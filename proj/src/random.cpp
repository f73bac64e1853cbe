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

#include "bcel/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcel {
namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t Rng::Mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::Derive(std::uint64_t stream) const {
  return Rng(Mix(key_ ^ Mix(stream + kGolden)));
}

std::uint64_t Rng::NextU64() {
  ++counter_;
  return Mix(key_ + counter_ * kGolden);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

int Rng::UniformInt(int bound) {
  if (bound <= 0) throw std::invalid_argument("UniformInt: bound must be > 0");
  // Lemire's multiply-shift; the bias is below 2^-32 for desk-scale bounds.
  const auto x = static_cast<unsigned __int128>(NextU64()) *
                 static_cast<unsigned __int128>(bound);
  return static_cast<int>(x >> 64);
}

int Rng::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) {
    throw std::invalid_argument("Categorical: weights must have positive sum");
  }
  const double u = Uniform() * total;
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = static_cast<int>(k);
    acc += weights[k];
    if (u < acc) return static_cast<int>(k);
  }
  return last_positive;
}

std::vector<double> Rng::UniformSimplex(int dim) {
  std::vector<double> x(dim);
  double total = 0.0;
  for (auto& v : x) {
    // Exponential(1) spacings; 1 - U lies in (0, 1].
    v = -std::log(1.0 - Uniform());
    total += v;
  }
  for (auto& v : x) v /= total;
  return x;
}

CategoricalSampler::CategoricalSampler(std::span<const double> probs) {
  cdf_.reserve(probs.size());
  double acc = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("CategoricalSampler: negative mass");
    acc += p;
    cdf_.push_back(acc);
  }
  if (!(acc > 0.0)) {
    throw std::invalid_argument("CategoricalSampler: zero total mass");
  }
}

int CategoricalSampler::Sample(Rng& rng) const {
  const double u = rng.Uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  // upper_bound never lands on a zero-mass cell: its cdf equals its
  // predecessor's.
  if (it == cdf_.end()) --it;
  return static_cast<int>(it - cdf_.begin());
}

}  // namespace bcel
