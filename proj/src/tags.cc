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

#include "gain/tags.h"

namespace gain {

namespace {

constexpr std::array<std::string_view, kNumTypes> kTypeNames = {
    "PER", "LOC", "GRP", "CORP", "PROD", "CW"};

constexpr std::array<std::string_view, kNumTags> kTagNames = {
    "O",      "B-PER",  "I-PER",  "B-LOC", "I-LOC",  "B-GRP", "I-GRP",
    "B-CORP", "I-CORP", "B-PROD", "I-PROD", "B-CW", "I-CW"};

}  // namespace

std::string_view type_name(EntityType t) {
  return kTypeNames[static_cast<size_t>(t)];
}

std::optional<EntityType> parse_type(std::string_view name) {
  for (size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<EntityType>(i);
  }
  return std::nullopt;
}

std::string_view tag_name(int tag) { return kTagNames[static_cast<size_t>(tag)]; }

std::optional<int> parse_tag(std::string_view name) {
  for (size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const std::array<std::string_view, kNumTags>& tag_names() { return kTagNames; }

}  // namespace gain
