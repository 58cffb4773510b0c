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

#include "gain/synth.h"

#include <fmt/format.h>

#include <algorithm>
#include <set>
#include <unordered_set>

#include "gain/errors.h"

namespace gain {

namespace {

std::array<std::vector<Surface>, kNumTypes> index_entries(const Gazetteer& gaz) {
  std::array<std::vector<Surface>, kNumTypes> out;
  for (EntityType t : kAllTypes) {
    out[type_index(t)].assign(gaz.entries(t).begin(), gaz.entries(t).end());
  }
  return out;
}

void append_entity(Sentence& sent, const Surface& surface, EntityType type) {
  for (size_t i = 0; i < surface.size(); ++i) {
    sent.tokens.push_back(surface[i]);
    sent.tags.push_back(i == 0 ? begin_tag(type) : inside_tag(type));
  }
}

}  // namespace

Dataset augment_replace(const Dataset& data, const Gazetteer& gaz, Rng& rng) {
  const auto pool = index_entries(gaz);
  std::set<std::string_view> missing;
  for (const auto& sent : data.sentences) {
    for (const auto& span : entity_spans(sent.tags)) {
      if (pool[type_index(span.type)].empty()) missing.insert(type_name(span.type));
    }
  }
  if (!missing.empty()) {
    throw DataError(fmt::format("gazetteer has no entries for label(s): {}",
                                fmt::join(missing, ", ")));
  }

  Dataset out;
  out.name = data.name + "-replaced";
  out.sentences.reserve(data.size());
  for (const auto& sent : data.sentences) {
    Sentence replaced;
    size_t cursor = 0;
    for (const auto& span : entity_spans(sent.tags)) {
      for (; cursor < span.start; ++cursor) {
        replaced.tokens.push_back(sent.tokens[cursor]);
        replaced.tags.push_back(sent.tags[cursor]);
      }
      const auto& candidates = pool[type_index(span.type)];
      append_entity(replaced, candidates[rng.below(candidates.size())], span.type);
      cursor = span.end;
    }
    for (; cursor < sent.size(); ++cursor) {
      replaced.tokens.push_back(sent.tokens[cursor]);
      replaced.tags.push_back(sent.tags[cursor]);
    }
    out.sentences.push_back(std::move(replaced));
  }
  return out;
}

std::optional<EntityType> slot_type(std::string_view token) {
  if (token.size() < 3 || token.front() != '<' || token.back() != '>') {
    return std::nullopt;
  }
  return parse_type(token.substr(1, token.size() - 2));
}

std::string filler_word(size_t i) {
  static constexpr std::array<std::string_view, 16> kSyllables = {
      "ka", "lo", "mi", "ne", "su", "ta", "ri", "po",
      "da", "fe", "gu", "ho", "ji", "ve", "zu", "be"};
  std::string word;
  size_t x = i;
  do {
    word += kSyllables[x % kSyllables.size()];
    x /= kSyllables.size();
  } while (x > 0);
  // Two syllables minimum keeps filler visually distinct from template words.
  if (word.size() < 4) word += "n";
  return word;
}

std::vector<Template> default_templates() {
  static const std::vector<std::vector<std::string>> kGeneric = {
      {"tell", "me", "about", "<X>"},
      {"what", "is", "<X>"},
      {"<X>", "news", "today"},
      {"search", "for", "<X>"},
      {"pictures", "of", "<X>"},
      {"i", "love", "<X>"},
      {"facts", "about", "<X>"},
      {"<X>", "wiki"},
      {"history", "of", "<X>"},
      {"who", "mentioned", "<X>"},
      {"is", "<X>", "popular"},
      {"compare", "<X>", "and", "<Y>"},
  };
  static const std::vector<std::vector<std::string>> kTyped = {
      {"who", "is", "<PER>"},
      {"<PER>", "was", "born", "in", "<LOC>"},
      {"the", "wife", "of", "<PER>"},
      {"weather", "in", "<LOC>"},
      {"flights", "to", "<LOC>"},
      {"<GRP>", "band", "members"},
      {"concert", "by", "<GRP>"},
      {"stock", "price", "of", "<CORP>"},
      {"<CORP>", "ceo", "salary"},
      {"where", "to", "buy", "<PROD>"},
      {"<PROD>", "price", "drop"},
      {"watch", "<CW>", "online"},
      {"<CW>", "movie", "cast"},
  };
  std::vector<Template> out;
  for (const auto& frame : kGeneric) {
    for (EntityType t : kAllTypes) {
      Template tpl;
      for (const auto& tok : frame) {
        if (tok == "<X>") {
          tpl.push_back(fmt::format("<{}>", type_name(t)));
        } else if (tok == "<Y>") {
          // Second slot rotates to the next type.
          tpl.push_back(fmt::format(
              "<{}>", type_name(kAllTypes[(type_index(t) + 1) % kNumTypes])));
        } else {
          tpl.push_back(tok);
        }
      }
      out.push_back(std::move(tpl));
    }
  }
  out.insert(out.end(), kTyped.begin(), kTyped.end());
  return out;
}

namespace {

class Generator {
 public:
  Generator(const SynthSpec& spec, const Gazetteer& gaz, Rng& rng)
      : spec_(spec), pool_(index_entries(gaz)), rng_(rng) {
    for (const auto& tpl : spec.template_pool) {
      for (const auto& tok : tpl) {
        if (!slot_type(tok)) reserved_.insert(tok);
      }
    }
    for (size_t i = 0; i < spec.vocab_size; ++i) reserved_.insert(filler_word(i));
  }

  SynthResult run() {
    SynthResult result;
    result.data.name = fmt::format("synth-{}", context_mode_name(spec_.context_mode));
    for (size_t i = 0; i < spec_.n_sentences; ++i) {
      result.data.sentences.push_back(spec_.context_mode == ContextMode::kLow
                                           ? low_sentence(result.companion)
                                           : rich_sentence(result.companion));
    }
    return result;
  }

 private:
  const Template& pick_template() {
    return spec_.template_pool[rng_.below(spec_.template_pool.size())];
  }

  bool taken(const Surface& s, const Gazetteer& companion) const {
    for (const auto& w : s) {
      if (reserved_.contains(w)) return true;
    }
    for (EntityType t : kAllTypes) {
      if (companion.contains(s, t)) return true;
    }
    return std::any_of(pending_.begin(), pending_.end(),
                       [&](const auto& p) { return p.first == s; });
  }

  Surface fresh_surface(const Gazetteer& companion, size_t max_tokens) {
    const auto cap = static_cast<int64_t>(std::clamp<size_t>(max_tokens, 1, 3));
    for (;;) {
      const auto n = static_cast<size_t>(rng_.range(1, cap));
      Surface s;
      for (size_t i = 0; i < n; ++i) {
        const auto len = static_cast<size_t>(rng_.range(4, 7));
        std::string word;
        for (size_t k = 0; k < len; ++k) {
          word += static_cast<char>('a' + rng_.below(26));
        }
        s.push_back(std::move(word));
      }
      if (!taken(s, companion)) return s;
    }
  }

  Surface entity(EntityType type, const Gazetteer& companion, size_t max_tokens) {
    Surface s;
    if (spec_.entity_source == EntitySource::kFresh) {
      s = fresh_surface(companion, max_tokens);
    } else {
      const auto& candidates = pool_[type_index(type)];
      s = candidates[rng_.below(candidates.size())];
    }
    pending_.emplace_back(s, type);
    return s;
  }

  void commit(Gazetteer& companion) {
    for (const auto& [surface, type] : pending_) companion.add(surface, type);
    pending_.clear();
  }

  // Expands a template. Fresh entities get at most `max_entity_tokens`.
  Sentence fill(const Template& tpl, const Gazetteer& companion,
                size_t max_entity_tokens) {
    Sentence sent;
    for (const auto& tok : tpl) {
      if (auto type = slot_type(tok)) {
        append_entity(sent, entity(*type, companion, max_entity_tokens), *type);
      } else {
        sent.tokens.push_back(tok);
        sent.tags.push_back(kOutsideTag);
      }
    }
    return sent;
  }

  void pad(Sentence& sent, size_t target) {
    while (sent.size() < target) {
      const std::string word =
          filler_word(rng_.below(std::max<size_t>(1, spec_.vocab_size)));
      if (rng_.bernoulli(0.5)) {
        sent.tokens.insert(sent.tokens.begin(), word);
        sent.tags.insert(sent.tags.begin(), kOutsideTag);
      } else {
        sent.tokens.push_back(word);
        sent.tags.push_back(kOutsideTag);
      }
    }
  }

  static size_t slots(const Template& tpl) {
    return static_cast<size_t>(std::count_if(
        tpl.begin(), tpl.end(), [](const auto& t) { return slot_type(t).has_value(); }));
  }

  Sentence low_sentence(Gazetteer& companion) {
    for (int attempt = 0;; ++attempt) {
      const auto& tpl = pick_template();
      const size_t n_slots = std::max<size_t>(1, slots(tpl));
      const size_t context = tpl.size() - slots(tpl);
      const size_t budget = 8 - std::min<size_t>(context, 7);
      Sentence sent = fill(tpl, companion, std::max<size_t>(1, budget / n_slots));
      if (sent.size() > 8 && attempt < 64) {
        pending_.clear();
        continue;
      }
      commit(companion);
      pad(sent, 3);
      return sent;
    }
  }

  Sentence rich_sentence(Gazetteer& companion) {
    const auto target = static_cast<size_t>(rng_.range(10, 25));
    Sentence sent = fill(pick_template(), companion, 3);
    commit(companion);
    if (rng_.bernoulli(0.5)) {
      Sentence second = fill(pick_template(), companion, 3);
      if (sent.size() + second.size() <= target) {
        commit(companion);
        sent.tokens.insert(sent.tokens.end(), second.tokens.begin(), second.tokens.end());
        sent.tags.insert(sent.tags.end(), second.tags.begin(), second.tags.end());
      } else {
        pending_.clear();
      }
    }
    pad(sent, target);
    return sent;
  }

  const SynthSpec& spec_;
  std::array<std::vector<Surface>, kNumTypes> pool_;
  Rng& rng_;
  std::unordered_set<std::string> reserved_;
  std::vector<std::pair<Surface, EntityType>> pending_;
};

}  // namespace

SynthResult synth_corpus(const SynthSpec& spec, const Gazetteer& gaz, Rng& rng) {
  if (spec.template_pool.empty()) throw ConfigError("empty template pool");
  for (const auto& tpl : spec.template_pool) {
    size_t n_slots = 0;
    for (const auto& tok : tpl) {
      if (tok.size() > 2 && tok.front() == '<' && tok.back() == '>') {
        auto type = slot_type(tok);
        if (!type) throw ConfigError(fmt::format("unknown slot type '{}'", tok));
        if (spec.entity_source == EntitySource::kGazetteer && gaz.count(*type) == 0) {
          throw ConfigError(fmt::format("slot {} has no gazetteer entries", tok));
        }
        ++n_slots;
      }
    }
    if (n_slots == 0) {
      throw ConfigError(fmt::format("template '{}' has no slot", fmt::join(tpl, " ")));
    }
  }
  return Generator(spec, gaz, rng).run();
}

SynthResult synth_corpus(const SynthSpec& spec, const Gazetteer& gaz) {
  Rng rng(spec.seed);
  return synth_corpus(spec, gaz, rng);
}

std::string_view context_mode_name(ContextMode mode) {
  return mode == ContextMode::kLow ? "low" : "rich";
}

ContextMode parse_context_mode(std::string_view name) {
  if (name == "low") return ContextMode::kLow;
  if (name == "rich") return ContextMode::kRich;
  throw ConfigError(fmt::format("unknown context mode '{}'", name));
}

}  // namespace gain
