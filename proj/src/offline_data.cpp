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

#include "bcel/offline_data.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bcel/random.hpp"

namespace bcel {

DataDistribution::DataDistribution(int num_states, int num_joint_actions,
                                   Table table)
    : num_states_(num_states),
      num_joint_(num_joint_actions),
      table_(std::move(table)),
      d_s_(num_states, 0.0) {
  if (table_.size() != static_cast<std::size_t>(num_states) * num_joint_) {
    throw std::invalid_argument("DataDistribution: table has wrong size");
  }
  double total = 0.0;
  for (double p : table_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("DataDistribution: negative mass");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("DataDistribution: mass does not sum to one");
  }
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < num_joint_; ++a) d_s_[s] += (*this)(s, a);
  }
}

DataDistribution DataDistribution::Uniform(const MarkovGame& game) {
  return DataDistribution(game.num_states(), game.num_joint_actions(),
                          Table(game.num_cells(), 1.0 / game.num_cells()));
}

DataDistribution DataDistribution::PointMass(const MarkovGame& game, int s,
                                             int a) {
  Table t(game.num_cells(), 0.0);
  t.at(static_cast<std::size_t>(s) * game.num_joint_actions() + a) = 1.0;
  return DataDistribution(game.num_states(), game.num_joint_actions(),
                          std::move(t));
}

DataDistribution DataDistribution::Random(const MarkovGame& game,
                                          std::uint64_t seed) {
  Rng rng(seed);
  auto t = rng.UniformSimplex(game.num_cells());
  // Renormalise against accumulated rounding so the sum check is tight.
  double total = 0.0;
  for (double p : t) total += p;
  for (auto& p : t) p /= total;
  return DataDistribution(game.num_states(), game.num_joint_actions(),
                          std::move(t));
}

DataDistribution DataDistribution::MatrixExample(double p1, double p2) {
  const double p3 = (1.0 - p1 - 4.0 * p2) / 4.0;
  if (!(p1 > 0.0 && p2 > 0.0 && p3 >= 0.0)) {
    throw std::invalid_argument(
        "MatrixExample: need p1, p2 > 0 and p1 + 4 p2 <= 1");
  }
  return DataDistribution(1, 9, {p1, p2, p2, p2, p3, p3, p2, p3, p3});
}

std::optional<double> DataDistribution::behavior(int s, int a) const {
  if (!behavior_defined(s)) return std::nullopt;
  return (*this)(s, a) / d_s_[s];
}

OfflineDataset::OfflineDataset(const MarkovGame& game, DataDistribution dist,
                               std::uint64_t seed)
    : num_players_(game.num_players()),
      num_states_(game.num_states()),
      space_(game.joint()),
      dist_(std::move(dist)),
      seed_(seed) {
  if (dist_.num_states() != num_states_ ||
      dist_.num_joint_actions() != space_.size()) {
    throw std::invalid_argument("OfflineDataset: distribution shape mismatch");
  }
}

void OfflineDataset::Append(int s, int a, std::span<const double> rewards,
                            int s_next) {
  if (s < 0 || s >= num_states_ || s_next < 0 || s_next >= num_states_ ||
      a < 0 || a >= space_.size() ||
      static_cast<int>(rewards.size()) != num_players_) {
    throw std::out_of_range("OfflineDataset: tuple index out of range");
  }
  states_.push_back(s);
  actions_.push_back(a);
  next_states_.push_back(s_next);
  rewards_.insert(rewards_.end(), rewards.begin(), rewards.end());
}

namespace {

std::vector<double> RewardVector(const MarkovGame& game, int s, int a) {
  std::vector<double> r(game.num_players());
  for (int i = 0; i < game.num_players(); ++i) r[i] = game.reward(i, s, a);
  return r;
}

}  // namespace

OfflineDataset sample_dataset(const MarkovGame& game,
                              const DataDistribution& dist, int n,
                              std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  OfflineDataset data(game, dist, seed);
  const int A = game.num_joint_actions();
  CategoricalSampler cell_sampler(dist.table());
  std::vector<std::optional<CategoricalSampler>> next_sampler(game.num_cells());
  std::vector<std::vector<double>> rewards(game.num_cells());
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const int cell = cell_sampler.Sample(rng);
    const int s = cell / A;
    const int a = cell % A;
    if (!next_sampler[cell]) {
      next_sampler[cell].emplace(game.transition_row(s, a));
      rewards[cell] = RewardVector(game, s, a);
    }
    data.Append(s, a, rewards[cell], next_sampler[cell]->Sample(rng));
  }
  return data;
}

OfflineDataset exhaustive_dataset(const MarkovGame& game,
                                  const DataDistribution& dist, int copies) {
  if (copies < 1) {
    throw std::invalid_argument("exhaustive_dataset: copies must be >= 1");
  }
  OfflineDataset data(game, dist, 0);
  const int A = game.num_joint_actions();
  for (int cell = 0; cell < game.num_cells(); ++cell) {
    const double target = copies * dist.table()[cell];
    const double k = std::round(target);
    if (std::abs(k - target) > 1e-9) {
      throw std::invalid_argument(
          "exhaustive_dataset: copies * d_D is not integral at cell " +
          std::to_string(cell));
    }
    const int s = cell / A;
    const int a = cell % A;
    const auto row = game.transition_row(s, a);
    const auto r = RewardVector(game, s, a);
    for (int j = 0; j < static_cast<int>(k); ++j) {
      const double u = (j + 0.5) / k;
      double acc = 0.0;
      int t = 0;
      for (; t < game.num_states() - 1; ++t) {
        acc += row[t];
        if (u < acc) break;
      }
      data.Append(s, a, r, t);
    }
  }
  return data;
}

Table empirical_distribution(const OfflineDataset& data) {
  if (data.size() < 1) {
    throw std::invalid_argument("empirical_distribution: empty dataset");
  }
  const int A = data.joint().size();
  std::vector<long> counts(static_cast<std::size_t>(data.num_states()) * A, 0);
  for (int k = 0; k < data.size(); ++k) {
    ++counts[static_cast<std::size_t>(data.state(k)) * A + data.action(k)];
  }
  Table out(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out[c] = static_cast<double>(counts[c]) / data.size();
  }
  return out;
}

TransitionStatistics::TransitionStatistics(const OfflineDataset& data)
    : n(data.size()),
      num_states(data.num_states()),
      num_joint_actions(data.joint().size()),
      num_players(data.num_players()) {
  const std::size_t cells =
      static_cast<std::size_t>(num_states) * num_joint_actions * num_states;
  count.assign(cells, 0.0);
  reward_sum.assign(cells * num_players, 0.0);
  reward_sq.assign(cells * num_players, 0.0);
  std::vector<char> seen(static_cast<std::size_t>(num_states) *
                             num_joint_actions,
                         0);
  for (int k = 0; k < n; ++k) {
    const auto idx = index(data.state(k), data.action(k), data.next_state(k));
    count[idx] += 1.0;
    for (int i = 0; i < num_players; ++i) {
      const double r = data.reward(k, i);
      reward_sum[player_offset(i) + idx] += r;
      reward_sq[player_offset(i) + idx] += r * r;
    }
    seen[static_cast<std::size_t>(data.state(k)) * num_joint_actions +
         data.action(k)] = 1;
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c]) observed_cells.push_back(static_cast<int>(c));
  }
}

namespace {

void AppendDouble(std::string& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

double ParseDouble(const std::string& tok, int line) {
  double x = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line),
                     "expected a real number, got '" + tok + "'");
  }
  return x;
}

long long ParseInt(const std::string& tok, int line) {
  long long x = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    throw ParseError("line " + std::to_string(line),
                     "expected an integer, got '" + tok + "'");
  }
  return x;
}

std::vector<std::string> Tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::string serialize_dataset(const OfflineDataset& data) {
  std::string out = "# bcel-dataset/1\n";
  out += "# n " + std::to_string(data.size()) + " seed " +
         std::to_string(data.seed()) + " players " +
         std::to_string(data.num_players()) + " states " +
         std::to_string(data.num_states()) + "\n# action_counts";
  for (int c : data.joint().action_counts()) out += " " + std::to_string(c);
  out += "\n# distribution";
  for (double p : data.distribution().table()) {
    out += ' ';
    AppendDouble(out, p);
  }
  out += '\n';
  for (int k = 0; k < data.size(); ++k) {
    out += std::to_string(data.state(k));
    for (int a : data.joint().Decode(data.action(k))) {
      out += ' ' + std::to_string(a);
    }
    for (int i = 0; i < data.num_players(); ++i) {
      out += ' ';
      AppendDouble(out, data.reward(k, i));
    }
    out += ' ' + std::to_string(data.next_state(k)) + '\n';
  }
  return out;
}

OfflineDataset deserialize_dataset(const MarkovGame& game,
                                   const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto next_header = [&](const char* key) {
    if (!std::getline(in, line)) {
      throw ParseError("line " + std::to_string(line_no + 1),
                       std::string("missing header '") + key + "'");
    }
    ++line_no;
    auto toks = Tokens(line);
    if (toks.size() < 2 || toks[0] != "#" || toks[1] != key) {
      throw ParseError("line " + std::to_string(line_no),
                       std::string("expected header '") + key + "'");
    }
    return std::vector<std::string>(toks.begin() + 2, toks.end());
  };
  next_header("bcel-dataset/1");
  const auto meta = next_header("n");
  if (meta.size() != 7 || meta[1] != "seed" || meta[3] != "players" ||
      meta[5] != "states") {
    throw ParseError("line 2", "malformed size header");
  }
  const auto n = ParseInt(meta[0], 2);
  const auto seed = static_cast<std::uint64_t>(std::stoull(meta[2]));
  if (ParseInt(meta[4], 2) != game.num_players() ||
      ParseInt(meta[6], 2) != game.num_states()) {
    throw ParseError("line 2", "dataset shape does not match the game");
  }
  const auto counts = next_header("action_counts");
  if (static_cast<int>(counts.size()) != game.num_players()) {
    throw ParseError("line 3", "wrong number of action counts");
  }
  for (int i = 0; i < game.num_players(); ++i) {
    if (ParseInt(counts[i], 3) != game.joint().action_count(i)) {
      throw ParseError("line 3", "action counts do not match the game");
    }
  }
  const auto dist_toks = next_header("distribution");
  Table dist;
  for (const auto& t : dist_toks) dist.push_back(ParseDouble(t, 4));
  std::optional<DataDistribution> distribution;
  try {
    distribution.emplace(game.num_states(), game.num_joint_actions(), dist);
  } catch (const std::invalid_argument& e) {
    throw ParseError("line 4", e.what());
  }
  OfflineDataset data(game, *distribution, seed);
  const int m = game.num_players();
  std::vector<int> actions(m);
  std::vector<double> rewards(m);
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = Tokens(line);
    if (toks.empty()) continue;
    if (static_cast<int>(toks.size()) != 2 * m + 2) {
      throw ParseError("line " + std::to_string(line_no),
                       "expected " + std::to_string(2 * m + 2) + " fields");
    }
    const auto s = static_cast<int>(ParseInt(toks[0], line_no));
    for (int i = 0; i < m; ++i) {
      actions[i] = static_cast<int>(ParseInt(toks[1 + i], line_no));
    }
    for (int i = 0; i < m; ++i) rewards[i] = ParseDouble(toks[1 + m + i], line_no);
    const auto t = static_cast<int>(ParseInt(toks[1 + 2 * m], line_no));
    try {
      const int a = game.joint().Encode(actions);
      if (s < 0 || s >= game.num_states()) throw std::out_of_range("state");
      for (int i = 0; i < m; ++i) {
        if (rewards[i] != game.reward(i, s, a)) {
          throw std::invalid_argument("reward differs from the game's r_i(s,a)");
        }
      }
      data.Append(s, a, rewards, t);
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no), e.what());
    }
  }
  if (data.size() != n) {
    throw ParseError("line " + std::to_string(line_no),
                     "header announces " + std::to_string(n) + " tuples, found " +
                         std::to_string(data.size()));
  }
  return data;
}

}  // namespace bcel
