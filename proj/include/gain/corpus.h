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

#ifndef GAIN_CORPUS_H_
#define GAIN_CORPUS_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gain/tags.h"

namespace gain {

struct Sentence {
  std::vector<std::string> tokens;
  std::vector<int> tags;

  size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Sentence> sentences;

  size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  // Equality ignores the name.
  bool operator==(const Dataset& other) const {
    return sentences == other.sentences;
  }
};

struct BioViolation {
  size_t position;
  std::string expected;  // e.g. "B-PER/I-PER"
  std::string found;     // e.g. "O precedes I-PER"
};

// Empty iff every I-X is preceded by B-X or I-X.
std::vector<BioViolation> validate_bio(std::span<const int> tags);

// Turns every orphan I-X into B-X.
std::vector<int> repair_bio(std::span<const int> tags);

enum class BioMode { kStrict, kLenient };

// Parses `token<TAB>tag` lines with blank lines between sentences.
// Lenient mode repairs BIO violations and appends a message per repair to
// `warnings` (if given); strict mode throws DataError.
Dataset parse_conll(std::string_view text, BioMode mode = BioMode::kStrict,
                    std::vector<std::string>* warnings = nullptr);
std::string serialize_conll(const Dataset& data);

Dataset read_conll(const std::filesystem::path& path,
                   BioMode mode = BioMode::kStrict,
                   std::vector<std::string>* warnings = nullptr);
void write_conll(const std::filesystem::path& path, const Dataset& data);

struct EntitySpan {
  size_t start;
  size_t end;  // exclusive
  EntityType type;

  bool operator==(const EntitySpan&) const = default;
  auto operator<=>(const EntitySpan&) const = default;
};

// Maximal entity spans of a valid BIO sequence.
std::vector<EntitySpan> entity_spans(std::span<const int> tags);

// Inverse of entity_spans for non-overlapping spans.
std::vector<int> spans_to_tags(std::span<const EntitySpan> spans, size_t n);

// Row i has a single 1 at column tags[i]. Throws DataError on bad indices.
FeatureMatrix tags_to_onehot(std::span<const int> tags);

// Throws DataError describing the first violation of any sentence.
void check_dataset(const Dataset& data);

}  // namespace gain

#endif  // GAIN_CORPUS_H_
