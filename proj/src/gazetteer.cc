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

#include "gain/gazetteer.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gain/errors.h"

namespace gain {

bool Gazetteer::add(const Surface& surface, EntityType label) {
  return by_label_[type_index(label)].insert(surface).second;
}

bool Gazetteer::contains(const Surface& surface, EntityType label) const {
  return entries(label).contains(surface);
}

size_t Gazetteer::total() const {
  size_t n = 0;
  for (const auto& s : by_label_) n += s.size();
  return n;
}

namespace {

Surface split_surface(std::string_view text) {
  Surface out;
  size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    if (end > pos) out.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

}  // namespace

Gazetteer parse_gazetteer(std::string_view text) {
  Gazetteer gaz;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw DataError(fmt::format("gazetteer line {}: expected surface<TAB>label",
                                  line_no));
    }
    const auto label_text = line.substr(tab + 1);
    const auto label = parse_type(label_text);
    if (!label) {
      throw DataError(fmt::format("gazetteer line {}: unknown label '{}'",
                                  line_no, label_text));
    }
    Surface surface = split_surface(line.substr(0, tab));
    if (surface.empty()) {
      throw DataError(fmt::format("gazetteer line {}: empty surface", line_no));
    }
    gaz.add(surface, *label);
  }
  return gaz;
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_gazetteer(buffer.str());
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string serialize_gazetteer(const Gazetteer& gaz) {
  std::string out;
  for (EntityType label : kAllTypes) {
    for (const auto& surface : gaz.entries(label)) {
      out += fmt::format("{}\t{}\n", fmt::join(surface, " "), type_name(label));
    }
  }
  return out;
}

void save_gazetteer(const std::filesystem::path& path, const Gazetteer& gaz) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << serialize_gazetteer(gaz);
}

MatchTrie::MatchTrie(const Gazetteer& gaz, bool fold_case)
    : fold_case_(fold_case) {
  nodes_.emplace_back();
  for (EntityType label : kAllTypes) {
    for (const auto& surface : gaz.entries(label)) {
      uint32_t node = 0;
      for (const auto& token : surface) {
        auto k = key(token);
        auto it = nodes_[node].children.find(k);
        if (it == nodes_[node].children.end()) {
          const auto next = static_cast<uint32_t>(nodes_.size());
          nodes_[node].children.emplace(std::move(k), next);
          nodes_.emplace_back();
          node = next;
        } else {
          node = it->second;
        }
      }
      nodes_[node].labels |= static_cast<uint8_t>(1u << type_index(label));
    }
  }
}

std::string MatchTrie::key(std::string_view token) const {
  std::string k(token);
  if (fold_case_) {
    for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return k;
}

uint8_t MatchTrie::lookup(const Surface& surface) const {
  uint32_t node = 0;
  for (const auto& token : surface) {
    auto it = nodes_[node].children.find(key(token));
    if (it == nodes_[node].children.end()) return 0;
    node = it->second;
  }
  return surface.empty() ? 0 : nodes_[node].labels;
}

std::vector<Match> MatchTrie::match(std::span<const std::string> tokens,
                                    MatchPolicy policy) const {
  std::vector<Match> out;
  for (size_t start = 0; start < tokens.size(); ++start) {
    // Longest length per label found from this start; 0 = none.
    std::array<size_t, kNumTypes> longest{};
    const size_t first = out.size();
    uint32_t node = 0;
    for (size_t i = start; i < tokens.size(); ++i) {
      auto it = nodes_[node].children.find(key(tokens[i]));
      if (it == nodes_[node].children.end()) break;
      node = it->second;
      const uint8_t labels = nodes_[node].labels;
      if (labels == 0) continue;
      for (EntityType label : kAllTypes) {
        if ((labels >> type_index(label) & 1u) == 0) continue;
        const size_t length = i - start + 1;
        if (policy == MatchPolicy::kAll) {
          out.push_back({start, length, label});
        } else {
          longest[type_index(label)] = length;
        }
      }
    }
    if (policy == MatchPolicy::kLongest) {
      for (EntityType label : kAllTypes) {
        if (longest[type_index(label)] > 0) {
          out.push_back({start, longest[type_index(label)], label});
        }
      }
    } else {
      std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                [](const Match& a, const Match& b) {
                  if (a.label != b.label) return a.label < b.label;
                  return a.length > b.length;
                });
    }
  }
  return out;
}

FeatureMatrix features_from_matches(std::span<const Match> matches, size_t n) {
  FeatureMatrix m(n);
  std::vector<bool> touched(n, false);
  for (const auto& match : matches) {
    m.set(match.start, static_cast<size_t>(begin_tag(match.label)));
    touched[match.start] = true;
    for (size_t i = match.start + 1; i < match.start + match.length; ++i) {
      m.set(i, static_cast<size_t>(inside_tag(match.label)));
      touched[i] = true;
    }
  }
  for (size_t i = 0; i < n; ++i) {
    if (!touched[i]) m.set(i, kOutsideTag);
  }
  return m;
}

FeatureMatrix match_features(const MatchTrie& trie,
                             std::span<const std::string> tokens,
                             MatchPolicy policy) {
  const auto matches = trie.match(tokens, policy);
  return features_from_matches(matches, tokens.size());
}

std::array<std::set<Surface>, kNumTypes> distinct_entities(const Dataset& data) {
  std::array<std::set<Surface>, kNumTypes> out;
  for (const auto& sent : data.sentences) {
    for (const auto& span : entity_spans(sent.tags)) {
      out[type_index(span.type)].emplace(
          sent.tokens.begin() + static_cast<std::ptrdiff_t>(span.start),
          sent.tokens.begin() + static_cast<std::ptrdiff_t>(span.end));
    }
  }
  return out;
}

CoverageReport coverage_rate(const Gazetteer& gaz, const Dataset& data) {
  CoverageReport report;
  report.total_entries = gaz.total();
  const auto gold = distinct_entities(data);
  double sum = 0.0;
  for (EntityType label : kAllTypes) {
    const auto& surfaces = gold[type_index(label)];
    if (surfaces.empty()) continue;
    size_t found = 0;
    for (const auto& s : surfaces) {
      if (gaz.contains(s, label)) ++found;
    }
    const double rate =
        static_cast<double>(found) / static_cast<double>(surfaces.size());
    report.per_label_rate[label] = rate;
    sum += rate;
  }
  if (!report.per_label_rate.empty()) {
    report.average_rate = sum / static_cast<double>(report.per_label_rate.size());
  }
  return report;
}

Gazetteer subsample_coverage(const Dataset& data, double target, Rng& rng) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw ConfigError(fmt::format("coverage target {} outside [0, 1]", target));
  }
  Gazetteer gaz;
  const auto gold = distinct_entities(data);
  for (EntityType label : kAllTypes) {
    std::vector<Surface> pool(gold[type_index(label)].begin(),
                              gold[type_index(label)].end());
    rng.shuffle(std::span<Surface>(pool));
    const auto keep = static_cast<size_t>(
        std::lround(target * static_cast<double>(pool.size())));
    for (size_t i = 0; i < keep && i < pool.size(); ++i) gaz.add(pool[i], label);
  }
  return gaz;
}

std::string_view policy_name(MatchPolicy policy) {
  return policy == MatchPolicy::kLongest ? "longest" : "all";
}

MatchPolicy parse_policy(std::string_view name) {
  if (name == "longest") return MatchPolicy::kLongest;
  if (name == "all") return MatchPolicy::kAll;
  throw ConfigError(fmt::format("unknown match policy '{}'", name));
}

}  // namespace gain
