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

#ifndef GAIN_TAGS_H_
#define GAIN_TAGS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gain {

// Six entity types in canonical order. The order fixes tag indices.
enum class EntityType : uint8_t { kPer = 0, kLoc, kGrp, kCorp, kProd, kCw };

inline constexpr int kNumTypes = 6;
inline constexpr int kNumTags = 13;
inline constexpr int kOutsideTag = 0;

inline constexpr std::array<EntityType, kNumTypes> kAllTypes = {
    EntityType::kPer,  EntityType::kLoc,  EntityType::kGrp,
    EntityType::kCorp, EntityType::kProd, EntityType::kCw};

// Tag layout: 0 = O, then B-X/I-X pairs per type in canonical order.
constexpr int begin_tag(EntityType t) { return 1 + 2 * static_cast<int>(t); }
constexpr int inside_tag(EntityType t) { return 2 + 2 * static_cast<int>(t); }
constexpr bool is_begin(int tag) { return tag > 0 && tag % 2 == 1; }
constexpr bool is_inside(int tag) { return tag > 0 && tag % 2 == 0; }
constexpr EntityType tag_type(int tag) {
  return static_cast<EntityType>((tag - 1) / 2);
}
constexpr int type_index(EntityType t) { return static_cast<int>(t); }

std::string_view type_name(EntityType t);
std::optional<EntityType> parse_type(std::string_view name);

std::string_view tag_name(int tag);
std::optional<int> parse_tag(std::string_view name);

// The full ordered tag list, O first.
const std::array<std::string_view, kNumTags>& tag_names();

// N x 13 binary matrix; one row per token.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(size_t rows)
      : rows_(rows), cells_(rows * kNumTags, 0) {}

  size_t rows() const { return rows_; }
  static constexpr size_t cols() { return kNumTags; }

  uint8_t at(size_t r, size_t c) const { return cells_[r * kNumTags + c]; }
  void set(size_t r, size_t c, uint8_t v = 1) { cells_[r * kNumTags + c] = v; }

  std::span<const uint8_t> row(size_t r) const {
    return {cells_.data() + r * kNumTags, kNumTags};
  }
  std::span<const uint8_t> cells() const { return cells_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  size_t rows_ = 0;
  std::vector<uint8_t> cells_;
};

}  // namespace gain

#endif  // GAIN_TAGS_H_
