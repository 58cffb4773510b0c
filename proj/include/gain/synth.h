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

#ifndef GAIN_SYNTH_H_
#define GAIN_SYNTH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gain/corpus.h"
#include "gain/gazetteer.h"
#include "gain/rng.h"

namespace gain {

// Replaces every gold entity with a uniformly sampled same-label gazetteer
// surface. Output has one sentence per input sentence; append it to the
// original to get the doubled augmented set.
Dataset augment_replace(const Dataset& data, const Gazetteer& gaz, Rng& rng);

enum class ContextMode { kRich, kLow };
enum class EntitySource { kGazetteer, kFresh };

// A template is a token list where slot tokens look like "<PER>".
using Template = std::vector<std::string>;

struct SynthSpec {
  size_t n_sentences = 0;
  std::vector<Template> template_pool;
  ContextMode context_mode = ContextMode::kLow;
  size_t vocab_size = 200;  // filler words available to rich mode
  uint64_t seed = 0;
  EntitySource entity_source = EntitySource::kGazetteer;
};

struct SynthResult {
  Dataset data;
  // Every entity surface emitted, under its label.
  Gazetteer companion;
};

// Low mode yields 3-8 token sentences, rich mode 10-25.
SynthResult synth_corpus(const SynthSpec& spec, const Gazetteer& gaz, Rng& rng);
// Seeds the generator from spec.seed.
SynthResult synth_corpus(const SynthSpec& spec, const Gazetteer& gaz);

// Query-style frames. Generic frames appear once per entity type, so their
// context alone does not reveal the type.
std::vector<Template> default_templates();

// Deterministic pronounceable filler word for index i.
std::string filler_word(size_t i);

// Entity type of a slot token such as "<LOC>", if it is one.
std::optional<EntityType> slot_type(std::string_view token);

std::string_view context_mode_name(ContextMode mode);
ContextMode parse_context_mode(std::string_view name);

}  // namespace gain

#endif  // GAIN_SYNTH_H_
