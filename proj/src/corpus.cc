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

#include "gain/corpus.h"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "gain/errors.h"

namespace gain {

namespace {

std::string describe_predecessor(std::span<const int> tags, size_t i) {
  return i == 0 ? std::string("<s>") : std::string(tag_name(tags[i - 1]));
}

bool continues(int prev, int tag) {
  return prev != kOutsideTag && tag_type(prev) == tag_type(tag);
}

}  // namespace

std::vector<BioViolation> validate_bio(std::span<const int> tags) {
  std::vector<BioViolation> out;
  for (size_t i = 0; i < tags.size(); ++i) {
    const int tag = tags[i];
    if (!is_inside(tag)) continue;
    if (i > 0 && continues(tags[i - 1], tag)) continue;
    const auto type = type_name(tag_type(tag));
    out.push_back({i, fmt::format("B-{}/I-{}", type, type),
                   fmt::format("{} precedes {}", describe_predecessor(tags, i),
                               tag_name(tag))});
  }
  return out;
}

std::vector<int> repair_bio(std::span<const int> tags) {
  std::vector<int> out(tags.begin(), tags.end());
  for (size_t i = 0; i < out.size(); ++i) {
    if (!is_inside(out[i])) continue;
    if (i > 0 && continues(out[i - 1], out[i])) continue;
    out[i] = begin_tag(tag_type(out[i]));
  }
  return out;
}

Dataset parse_conll(std::string_view text, BioMode mode,
                    std::vector<std::string>* warnings) {
  Dataset data;
  Sentence current;
  std::vector<size_t> lines;  // source line of each token in `current`

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    auto violations = validate_bio(current.tags);
    if (!violations.empty()) {
      if (mode == BioMode::kStrict) {
        const auto& v = violations.front();
        throw DataError(fmt::format("{} at line {} without head",
                                    tag_name(current.tags[v.position]),
                                    lines[v.position]));
      }
      for (const auto& v : violations) {
        if (warnings != nullptr) {
          warnings->push_back(fmt::format(
              "line {}: {} repaired to B-", lines[v.position], v.found));
        }
      }
      current.tags = repair_bio(current.tags);
    }
    data.sentences.push_back(std::move(current));
    current = Sentence{};
    lines.clear();
  };

  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      continue;
    }
    const size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw DataError(
          fmt::format("line {}: expected token<TAB>tag, got '{}'", line_no, line));
    }
    const std::string_view tag_text = line.substr(tab + 1);
    const auto tag = parse_tag(tag_text);
    if (!tag) {
      throw DataError(
          fmt::format("line {}: unknown tag '{}'", line_no, tag_text));
    }
    current.tokens.emplace_back(line.substr(0, tab));
    current.tags.push_back(*tag);
    lines.push_back(line_no);
  }
  flush();
  return data;
}

std::string serialize_conll(const Dataset& data) {
  std::string out;
  for (size_t s = 0; s < data.sentences.size(); ++s) {
    if (s > 0) out += '\n';
    const auto& sent = data.sentences[s];
    for (size_t i = 0; i < sent.size(); ++i) {
      out += sent.tokens[i];
      out += '\t';
      out += tag_name(sent.tags[i]);
      out += '\n';
    }
  }
  return out;
}

Dataset read_conll(const std::filesystem::path& path, BioMode mode,
                   std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  Dataset data;
  try {
    data = parse_conll(buffer.str(), mode, warnings);
  } catch (const DataError& e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
  data.name = path.stem().string();
  return data;
}

void write_conll(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << serialize_conll(data);
}

std::vector<EntitySpan> entity_spans(std::span<const int> tags) {
  std::vector<EntitySpan> spans;
  for (size_t i = 0; i < tags.size(); ++i) {
    const int tag = tags[i];
    if (tag == kOutsideTag) continue;
    const bool extends = is_inside(tag) && !spans.empty() &&
                         spans.back().end == i &&
                         spans.back().type == tag_type(tag);
    if (extends) {
      spans.back().end = i + 1;
    } else {
      spans.push_back({i, i + 1, tag_type(tag)});
    }
  }
  return spans;
}

std::vector<int> spans_to_tags(std::span<const EntitySpan> spans, size_t n) {
  std::vector<int> tags(n, kOutsideTag);
  for (const auto& span : spans) {
    tags[span.start] = begin_tag(span.type);
    for (size_t i = span.start + 1; i < span.end; ++i) {
      tags[i] = inside_tag(span.type);
    }
  }
  return tags;
}

FeatureMatrix tags_to_onehot(std::span<const int> tags) {
  FeatureMatrix m(tags.size());
  for (size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] < 0 || tags[i] >= kNumTags) {
      throw DataError(fmt::format("tag index {} at position {} out of range",
                                  tags[i], i));
    }
    m.set(i, static_cast<size_t>(tags[i]));
  }
  return m;
}

void check_dataset(const Dataset& data) {
  for (size_t s = 0; s < data.sentences.size(); ++s) {
    const auto& sent = data.sentences[s];
    if (sent.tokens.size() != sent.tags.size()) {
      throw DataError(fmt::format("sentence {}: {} tokens but {} tags", s,
                                  sent.tokens.size(), sent.tags.size()));
    }
    auto violations = validate_bio(sent.tags);
    if (!violations.empty()) {
      throw DataError(fmt::format("sentence {} position {}: {}", s,
                                  violations.front().position,
                                  violations.front().found));
    }
  }
}

}  // namespace gain
