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

#include "gain/experiment.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "gain/errors.h"
#include "gain/synth.h"

namespace gain {

namespace {

SynthResult synth(size_t n, ContextMode mode, uint64_t seed) {
  SynthSpec spec;
  spec.n_sentences = n;
  spec.template_pool = default_templates();
  spec.context_mode = mode;
  spec.entity_source = EntitySource::kFresh;
  spec.seed = seed;
  return synth_corpus(spec, Gazetteer{});
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  out.sentences.insert(out.sentences.end(), b.sentences.begin(), b.sentences.end());
  return out;
}

}  // namespace

GazetteerTask make_gazetteer_task(const TaskSpec& spec) {
  GazetteerTask task;
  task.pretrain = synth(spec.n_pretrain, ContextMode::kRich,
                        derive_seed(spec.seed, "task/pretrain")).data;
  task.pretrain.name = "pretrain";
  SynthResult train = synth(spec.n_train, ContextMode::kLow, derive_seed(spec.seed, "task/train"));
  SynthResult val = synth(spec.n_val, ContextMode::kLow, derive_seed(spec.seed, "task/val"));
  task.train = std::move(train.data);
  task.train.name = "train";
  task.val = std::move(val.data);
  task.val.name = "val";
  task.gazetteer = std::move(train.companion);
  for (EntityType t : kAllTypes) {
    for (const auto& s : val.companion.entries(t)) task.gazetteer.add(s, t);
  }
  return task;
}

RunResult train_gain(const Model& pretrained, const Dataset& train, const Dataset* val,
                     const MatchTrie& trie, const ModelConfig& model_cfg,
                     const TrainConfig& cfg) {
  RunResult r{make_gain_model(pretrained, model_cfg, derive_seed(cfg.seed, "model/init")),
              {}, {}, {}, 0.0};
  if (r.model.has_gaznet() && !cfg.skip_stage1) stage1_adapt(r.model, train, cfg, &r.stage1);
  stage2_train(r.model, train, val, trie, cfg, &r.stage2);
  if (val != nullptr) r.val_report = evaluate_model(r.model, *val, &trie, cfg.match_policy);
  r.mean_lambda = r.model.mean_lambda();
  return r;
}

RunResult run_gain(const GazetteerTask& task, const Model& pretrained,
                   const ModelConfig& model_cfg, const TrainConfig& cfg,
                   const Gazetteer& gazetteer) {
  const MatchTrie trie(gazetteer);
  return train_gain(pretrained, task.train, &task.val, trie, model_cfg, cfg);
}

std::vector<SweepRow> sweep_coverage(const GazetteerTask& task, const Model& pretrained,
                                     const std::vector<double>& rates,
                                     const ModelConfig& model_cfg, const TrainConfig& cfg) {
  if (model_cfg.integration != IntegrationMode::kWeightedSum) {
    throw ConfigError("sweep-coverage needs weighted_sum integration for the lambda column");
  }
  const Dataset all = concat(task.train, task.val);
  std::vector<SweepRow> rows;
  for (double rate : rates) {
    const std::string label = fmt::format("sweep/{}", rate);
    Rng rng(derive_seed(cfg.seed, label + "/subsample"));
    const Gazetteer gaz = subsample_coverage(all, rate, rng);
    TrainConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(cfg.seed, label);
    spdlog::info("coverage {}: {} gazetteer entries", rate, gaz.total());
    RunResult r = run_gain(task, pretrained, model_cfg, run_cfg, gaz);
    rows.push_back({rate, coverage_rate(gaz, all).average_rate, gaz.total(),
                    r.val_report.macro_f1, r.mean_lambda});
  }
  return rows;
}

nlohmann::json sweep_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"rate", r.rate},
                   {"coverage", r.coverage},
                   {"entries", r.entries},
                   {"macro_f1", r.macro_f1},
                   {"mean_sigmoid_lambda", r.mean_lambda}});
  }
  return out;
}

namespace {

template <typename T>
T get_as(const nlohmann::json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

std::string_view source_name(EntitySource s) {
  return s == EntitySource::kFresh ? "fresh" : "gazetteer";
}

EntitySource parse_source(std::string_view name) {
  if (name == "fresh") return EntitySource::kFresh;
  if (name == "gazetteer") return EntitySource::kGazetteer;
  throw ConfigError(fmt::format("unknown entity source '{}'", name));
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  bool alpha_given = false;
  for (const auto& [key, v] : doc.items()) {
    if (key == "seed") cfg.seed = get_as<uint64_t>(v, key);
    else if (key == "model") cfg.model = model_config_from_json(v);
    else if (key == "train") {
      if (v.is_object() && v.contains("seed")) {
        throw ConfigError("train.seed derives from the master seed; set 'seed' instead");
      }
      alpha_given = v.is_object() && v.contains("alpha");
      cfg.train = train_config_from_json(v);
    } else if (key == "task") {
      if (!v.is_object()) throw ConfigError("task must be a JSON object");
      for (const auto& [k, x] : v.items()) {
        if (k == "n_pretrain") cfg.task.n_pretrain = get_as<size_t>(x, k);
        else if (k == "n_train") cfg.task.n_train = get_as<size_t>(x, k);
        else if (k == "n_val") cfg.task.n_val = get_as<size_t>(x, k);
        else throw ConfigError(fmt::format("unknown task setting '{}'", k));
      }
    } else if (key == "synth") {
      if (!v.is_object()) throw ConfigError("synth must be a JSON object");
      for (const auto& [k, x] : v.items()) {
        if (k == "n_sentences") cfg.synth_sentences = get_as<size_t>(x, k);
        else if (k == "context_mode") cfg.synth_mode = parse_context_mode(get_as<std::string>(x, k));
        else if (k == "entity_source") cfg.synth_source = parse_source(get_as<std::string>(x, k));
        else if (k == "vocab_size") cfg.synth_vocab = get_as<size_t>(x, k);
        else throw ConfigError(fmt::format("unknown synth setting '{}'", k));
      }
    } else if (key == "gazetteer") cfg.gazetteer_path = get_as<std::string>(v, key);
    else if (key == "fold_case") cfg.fold_case = get_as<bool>(v, key);
    else if (key == "sweep_rates") cfg.sweep_rates = get_as<std::vector<double>>(v, key);
    else if (key == "folds") cfg.folds = get_as<size_t>(v, key);
    else throw ConfigError(fmt::format("unknown setting '{}'", key));
  }
  if (!alpha_given) cfg.train.alpha = TrainConfig::default_alpha(cfg.model.classifier);
  for (double r : cfg.sweep_rates) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(fmt::format("sweep rate {} outside [0, 1]", r));
  }
  if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
  cfg.task.seed = derive_seed(cfg.seed, "task");
  cfg.train.seed = derive_seed(cfg.seed, "train");
  cfg.train.validate();
  return cfg;
}

nlohmann::json run_config_json(const RunConfig& cfg) {
  nlohmann::json train = train_config_json(cfg.train);
  train.erase("seed");
  return {{"seed", cfg.seed},
          {"model", model_config_json(cfg.model)},
          {"train", train},
          {"task", {{"n_pretrain", cfg.task.n_pretrain},
                    {"n_train", cfg.task.n_train},
                    {"n_val", cfg.task.n_val}}},
          {"synth", {{"n_sentences", cfg.synth_sentences},
                     {"context_mode", context_mode_name(cfg.synth_mode)},
                     {"entity_source", source_name(cfg.synth_source)},
                     {"vocab_size", cfg.synth_vocab}}},
          {"gazetteer", cfg.gazetteer_path},
          {"fold_case", cfg.fold_case},
          {"sweep_rates", cfg.sweep_rates},
          {"folds", cfg.folds}};
}

void apply_override(nlohmann::json& doc, std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError(fmt::format("override '{}' is not key=value", assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json* node = &doc;
  size_t pos = 0;
  while (true) {
    const size_t dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError(fmt::format("bad override key '{}'", key));
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError(fmt::format("'{}' is not a section", key));
      *node = nlohmann::json::object();
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string out = fmt::format("{:>13}  {:>8}  {:>8}  {:>10}\n", "Coverage Rate", "entries",
                                "macro@F1", "mean s(l)");
  for (const auto& r : rows) {
    out += fmt::format("{:>12.0f}%  {:>8}  {:>8.4f}  {:>10.4f}\n", 100.0 * r.rate, r.entries,
                       r.macro_f1, r.mean_lambda);
  }
  return out;
}

}  // namespace gain
