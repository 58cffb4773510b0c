// Copyright 2026 The GAIN-NER Authors.
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

#ifndef GAIN_GAZETTEER_H_
#define GAIN_GAZETTEER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gain/corpus.h"
#include "gain/rng.h"
#include "gain/tags.h"

namespace gain {

using Surface = std::vector<std::string>;

// Label-partitioned set of surface forms. A surface may live under several
// labels ("apple" as both PROD and CORP).
class Gazetteer {
 public:
  // Returns false if the surface was already present under `label`.
  bool add(const Surface& surface, EntityType label);
  bool contains(const Surface& surface, EntityType label) const;

  const std::set<Surface>& entries(EntityType label) const {
    return by_label_[type_index(label)];
  }
  size_t count(EntityType label) const { return entries(label).size(); }
  size_t total() const;
  bool empty() const { return total() == 0; }

  bool operator==(const Gazetteer&) const = default;

 private:
  std::array<std::set<Surface>, kNumTypes> by_label_;
};

// TSV of `surface<TAB>label`, space-separated surface tokens.
Gazetteer parse_gazetteer(std::string_view text);
Gazetteer load_gazetteer(const std::filesystem::path& path);
std::string serialize_gazetteer(const Gazetteer& gaz);
void save_gazetteer(const std::filesystem::path& path, const Gazetteer& gaz);

enum class MatchPolicy { kLongest, kAll };

struct Match {
  size_t start;
  size_t length;
  EntityType label;

  bool operator==(const Match&) const = default;
};

// Prefix tree over surface tokens. Immutable after construction.
class MatchTrie {
 public:
  explicit MatchTrie(const Gazetteer& gaz, bool fold_case = false);

  // Label bitmask (bit i = EntityType i) of an exact surface lookup.
  uint8_t lookup(const Surface& surface) const;

  std::vector<Match> match(std::span<const std::string> tokens,
                           MatchPolicy policy) const;

  size_t node_count() const { return nodes_.size(); }
  bool fold_case() const { return fold_case_; }

 private:
  struct Node {
    std::unordered_map<std::string, uint32_t> children;
    uint8_t labels = 0;
  };

  std::string key(std::string_view token) const;

  std::vector<Node> nodes_;
  bool fold_case_;
};

inline MatchTrie build_trie(const Gazetteer& gaz, bool fold_case = false) {
  return MatchTrie(gaz, fold_case);
}

// Matches sorted by (start, label, length descending).
inline std::vector<Match> match_tokens(const MatchTrie& trie,
                                       std::span<const std::string> tokens,
                                       MatchPolicy policy) {
  return trie.match(tokens, policy);
}

// One-hot gazetteer features: B-label at match start, I-label on the rest,
// OR-ed across matches; O where nothing matched.
FeatureMatrix match_features(const MatchTrie& trie,
                             std::span<const std::string> tokens,
                             MatchPolicy policy);
FeatureMatrix features_from_matches(std::span<const Match> matches, size_t n);

struct CoverageReport {
  std::map<EntityType, double> per_label_rate;  // labels present in the data
  double average_rate = 0.0;
  size_t total_entries = 0;
};

CoverageReport coverage_rate(const Gazetteer& gaz, const Dataset& data);

// Distinct gold surfaces per label, as the dataset spells them.
std::array<std::set<Surface>, kNumTypes> distinct_entities(const Dataset& data);

// Gazetteer keeping round(target * n) random distinct gold entities per label.
Gazetteer subsample_coverage(const Dataset& data, double target, Rng& rng);

std::string_view policy_name(MatchPolicy policy);
MatchPolicy parse_policy(std::string_view name);

}  // namespace gain

#endif  // GAIN_GAZETTEER_H_
