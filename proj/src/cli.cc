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

#include "gain/cli.h"

#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gain/ensemble.h"
#include "gain/errors.h"
#include "gain/experiment.h"
#include "gain/gradsuite.h"
#include "gain/log.h"
#include "gain/synth.h"
#include "gain/train.h"

namespace gain {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kGradTolerance = 1e-4;

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Options shared by every subcommand, plus the resolved state.
struct Session {
  std::ostream& out;
  std::ostream& err;
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
  std::string command;
  // Command-specific defaults, applied beneath the config file.
  std::vector<std::string> defaults;
  RunConfig cfg;
  std::optional<GazetteerTask> task_cache;

  void resolve() {
    json doc = json::object();
    for (const auto& d : defaults) apply_override(doc, d);
    if (!config_path.empty()) {
      std::string text;
      try {
        text = read_text(config_path);
      } catch (const DataError& e) {
        throw ConfigError(e.what());
      }
      const json file = json::parse(text, nullptr, false);
      if (file.is_discarded() || !file.is_object()) {
        throw ConfigError(fmt::format("config '{}' is not a JSON object", config_path));
      }
      doc.merge_patch(file);
    }
    if (seed) doc["seed"] = *seed;
    for (const auto& s : sets) apply_override(doc, s);
    cfg = run_config_from_json(doc);
  }

  // Creates the run directory and records the resolved configuration.
  // Returns nullopt when no --out was given and the command allows that.
  std::optional<fs::path> run_dir(bool required = true) {
    if (out_dir.empty()) {
      if (required) throw ConfigError(fmt::format("'{}' needs --out <dir>", command));
      return std::nullopt;
    }
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(fmt::format("cannot create '{}': {}", out_dir, ec.message()));
    write_json(dir / "resolved_config.json", {{"tool", "gain"},
                                              {"version", kToolVersion},
                                              {"command", command},
                                              {"config", run_config_json(cfg)}});
    return dir;
  }

  const GazetteerTask& task() {
    if (!task_cache) {
      spdlog::info("building the synthetic task ({} pretrain / {} train / {} val)",
                   cfg.task.n_pretrain, cfg.task.n_train, cfg.task.n_val);
      task_cache = make_gazetteer_task(cfg.task);
    }
    return *task_cache;
  }

  Dataset data_or(const std::string& path, const Dataset& (Session::*fallback)()) {
    return path.empty() ? (this->*fallback)() : read_conll(path);
  }
  const Dataset& task_pretrain() { return task().pretrain; }
  const Dataset& task_train() { return task().train; }
  const Dataset& task_val() { return task().val; }

  // Explicit path, else the configured one, else the synthetic task's.
  Gazetteer gazetteer(const std::string& path, bool task_fallback) {
    if (!path.empty()) return load_gazetteer(path);
    if (!cfg.gazetteer_path.empty()) return load_gazetteer(cfg.gazetteer_path);
    if (task_fallback) return task().gazetteer;
    throw ConfigError(fmt::format("'{}' needs --gazetteer <tsv>", command));
  }
};

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

json log_json(const TrainLog& log) {
  json epochs = json::array();
  for (const auto& e : log.epochs) {
    json r = {{"epoch", e.epoch}, {"mean_loss", e.mean_loss}};
    if (!std::isnan(e.val_macro_f1)) r["val_macro_f1"] = e.val_macro_f1;
    epochs.push_back(r);
  }
  json out = {{"epochs", epochs}, {"best_epoch", log.best_epoch}};
  if (!std::isnan(log.best_val_f1)) out["best_val_f1"] = log.best_val_f1;
  return out;
}

// Logits for softmax and span models (averaging input), decoded tags for
// CRF models (vote input).
PredictionSet model_predictions(Model& model, const Dataset& data, const MatchTrie* trie,
                                MatchPolicy policy, std::string model_id) {
  PredictionSet set;
  set.model_id = std::move(model_id);
  const ClassifierKind kind = model.config().classifier;
  set.span_logits = kind == ClassifierKind::kSpan;
  const auto preds = predict_dataset(model, data, trie, policy);
  for (size_t i = 0; i < preds.size(); ++i) {
    SentencePrediction s;
    s.tokens = data.sentences[i].tokens;
    if (kind == ClassifierKind::kCrf) {
      s.tags = preds[i].tags;
    } else {
      s.logits = preds[i].logits;
    }
    set.sentences.push_back(std::move(s));
  }
  return set;
}

Dataset with_tags(const Dataset& like, const std::vector<std::vector<int>>& tags) {
  Dataset d;
  d.name = like.name;
  for (size_t i = 0; i < like.size(); ++i) {
    d.sentences.push_back({like.sentences[i].tokens, tags[i]});
  }
  return d;
}

std::vector<std::vector<int>> ensemble_tags(std::span<const PredictionSet> members,
                                            std::string_view mode,
                                            const std::vector<double>& weights,
                                            size_t span_width) {
  check_aligned(members);
  const LogitDecoder span_dec = span_logit_decoder(span_width);
  const size_t n = members.front().sentences.size();
  std::vector<std::vector<int>> out(n);
  if (mode == "avg-logits") {
    for (const auto& m : members) {
      if (m.span_logits != members.front().span_logits) {
        throw DataError("avg-logits members mix tag and span logits");
      }
    }
    const LogitDecoder decode =
        members.front().span_logits ? span_dec : LogitDecoder(decode_tag_logits);
    for (size_t i = 0; i < n; ++i) {
      std::vector<num::Tensor> logits;
      for (const auto& m : members) {
        if (!m.sentences[i].logits.allocated()) {
          throw DataError(fmt::format("member '{}' has no logits; use --mode vote", m.model_id));
        }
        logits.push_back(m.sentences[i].logits);
      }
      out[i] = avg_logits_decode(logits, decode);
    }
    return out;
  }
  std::vector<double> w = weights;
  if (w.empty()) {
    for (const auto& m : members) w.push_back(m.weight);
  }
  if (w.size() != members.size()) {
    throw ConfigError(fmt::format("{} weights for {} members", w.size(), members.size()));
  }
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0); }) ||
      std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
    throw ConfigError("vote weights must be >= 0 and not all zero");
  }
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::vector<int>> votes;
    for (const auto& m : members) {
      const auto& s = m.sentences[i];
      if (!s.logits.allocated()) votes.push_back(s.tags);
      else votes.push_back(m.span_logits ? span_dec(s.logits) : decode_tag_logits(s.logits));
    }
    out[i] = weighted_token_vote(votes, w);
  }
  return out;
}

// Compact layout: O plus the B/I columns of every label that fired, or all
// 13 columns.
std::string feature_table(std::span<const std::string> tokens, const FeatureMatrix& f,
                          bool all_columns) {
  std::vector<int> cols{kOutsideTag};
  for (EntityType t : kAllTypes) {
    const int b = begin_tag(t), i = inside_tag(t);
    bool fired = all_columns;
    for (size_t r = 0; r < f.rows() && !fired; ++r) {
      fired = f.at(r, static_cast<size_t>(b)) != 0 || f.at(r, static_cast<size_t>(i)) != 0;
    }
    if (fired) {
      cols.push_back(b);
      cols.push_back(i);
    }
  }
  size_t width = 5;
  for (const auto& t : tokens) width = std::max(width, t.size());
  std::string out = fmt::format("{:<{}}", "Words", width);
  for (int c : cols) out += fmt::format("  {}", tag_name(c));
  out += '\n';
  for (size_t r = 0; r < f.rows(); ++r) {
    out += fmt::format("{:<{}}", tokens[r], width);
    for (int c : cols) {
      out += fmt::format("  {:>{}}", f.at(r, static_cast<size_t>(c)), tag_name(c).size());
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

void gazetteer_build(Session& s, const std::vector<std::string>& data_paths,
                     std::optional<double> coverage) {
  Dataset all;
  for (const auto& p : data_paths) {
    const Dataset d = read_conll(p);
    all.sentences.insert(all.sentences.end(), d.sentences.begin(), d.sentences.end());
  }
  Gazetteer gaz;
  if (coverage) {
    Rng rng(derive_seed(s.cfg.seed, "gazetteer/subsample"));
    gaz = subsample_coverage(all, *coverage, rng);
  } else {
    const auto entities = distinct_entities(all);
    for (EntityType t : kAllTypes) {
      for (const auto& surface : entities[type_index(t)]) gaz.add(surface, t);
    }
  }
  const fs::path dir = *s.run_dir();
  save_gazetteer(dir / "gazetteer.tsv", gaz);
  for (EntityType t : kAllTypes) s.out << fmt::format("{:<6} {}\n", type_name(t), gaz.count(t));
  s.out << fmt::format("{:<6} {}\n", "total", gaz.total());
}

void gazetteer_match(Session& s, const std::string& gaz_path, const std::string& text,
                     const std::string& policy_text, bool all_columns) {
  const Gazetteer gaz = s.gazetteer(gaz_path, false);
  const MatchTrie trie(gaz, s.cfg.fold_case);
  const MatchPolicy policy =
      policy_text.empty() ? s.cfg.train.match_policy : parse_policy(policy_text);
  const auto tokens = split_tokens(text);
  if (tokens.empty()) throw ConfigError("--tokens is empty");
  const auto matches = trie.match(tokens, policy);
  const FeatureMatrix f = features_from_matches(matches, tokens.size());
  s.out << feature_table(tokens, f, all_columns);
  if (auto dir = s.run_dir(false)) {
    json m = json::array();
    for (const auto& x : matches) {
      m.push_back({{"start", x.start}, {"length", x.length}, {"label", type_name(x.label)}});
    }
    json rows = json::array();
    for (size_t r = 0; r < f.rows(); ++r) {
      rows.push_back(std::vector<int>(f.row(r).begin(), f.row(r).end()));
    }
    write_json(*dir / "match.json",
               {{"tokens", tokens}, {"policy", policy_name(policy)}, {"matches", m},
                {"features", rows}});
  }
}

void gazetteer_coverage(Session& s, const std::string& gaz_path, const std::string& data_path) {
  const Gazetteer gaz = s.gazetteer(gaz_path, false);
  const Dataset data = read_conll(data_path);
  const CoverageReport r = coverage_rate(gaz, data);
  json per = json::object();
  for (const auto& [t, rate] : r.per_label_rate) {
    per[std::string(type_name(t))] = rate;
    s.out << fmt::format("{:<8} {:.4f}\n", type_name(t), rate);
  }
  s.out << fmt::format("{:<8} {:.4f}\n", "average", r.average_rate);
  if (auto dir = s.run_dir(false)) {
    write_json(*dir / "coverage.json", {{"per_label", per},
                                        {"average", r.average_rate},
                                        {"entries", r.total_entries}});
  }
}

void data_synth(Session& s, bool whole_task, const std::string& gaz_path) {
  const fs::path dir = *s.run_dir();
  if (whole_task) {
    const GazetteerTask& t = s.task();
    write_conll(dir / "pretrain.conll", t.pretrain);
    write_conll(dir / "train.conll", t.train);
    write_conll(dir / "val.conll", t.val);
    save_gazetteer(dir / "gazetteer.tsv", t.gazetteer);
    s.out << fmt::format("pretrain {} / train {} / val {} sentences, {} gazetteer entries\n",
                         t.pretrain.size(), t.train.size(), t.val.size(), t.gazetteer.total());
    return;
  }
  SynthSpec spec;
  spec.n_sentences = s.cfg.synth_sentences;
  spec.template_pool = default_templates();
  spec.context_mode = s.cfg.synth_mode;
  spec.entity_source = s.cfg.synth_source;
  spec.vocab_size = s.cfg.synth_vocab;
  spec.seed = s.cfg.synth_seed();
  const Gazetteer gaz = spec.entity_source == EntitySource::kGazetteer
                            ? s.gazetteer(gaz_path, false)
                            : Gazetteer{};
  const SynthResult r = synth_corpus(spec, gaz);
  write_conll(dir / "data.conll", r.data);
  save_gazetteer(dir / "companion.tsv", r.companion);
  s.out << fmt::format("{} sentences, {} distinct entities\n", r.data.size(),
                       r.companion.total());
}

void data_augment(Session& s, const std::string& data_path, const std::string& gaz_path,
                  bool append) {
  const Dataset data = read_conll(data_path);
  const Gazetteer gaz = s.gazetteer(gaz_path, false);
  Rng rng(derive_seed(s.cfg.seed, "augment"));
  Dataset out = augment_replace(data, gaz, rng);
  if (append) out.sentences.insert(out.sentences.begin(), data.sentences.begin(), data.sentences.end());
  write_conll(*s.run_dir() / "augmented.conll", out);
  s.out << fmt::format("{} sentences written\n", out.size());
}

void data_validate(Session& s, const std::string& data_path, bool lenient) {
  const Dataset d = read_conll(data_path, lenient ? BioMode::kLenient : BioMode::kStrict);
  size_t tokens = 0, entities = 0;
  for (const auto& sent : d.sentences) {
    tokens += sent.size();
    entities += entity_spans(sent.tags).size();
  }
  s.out << fmt::format("{}: {} sentences, {} tokens, {} entities, valid\n", data_path, d.size(),
                       tokens, entities);
}

void pretrain_cmd(Session& s, const std::string& data_path) {
  const fs::path dir = *s.run_dir();
  const Dataset data = s.data_or(data_path, &Session::task_pretrain);
  TrainLog log;
  Model m = pretrain_encoder(data, s.cfg.model, s.cfg.train, &log);
  save_checkpoint(m, s.cfg.train, (dir / "pretrained.ckpt").string());
  write_json(dir / "pretrain_log.json", log_json(log));
  s.out << fmt::format("pretrained on {} sentences, final loss {:.6f}\n", data.size(),
                       log.epochs.empty() ? 0.0 : log.epochs.back().mean_loss);
}

void adapt_cmd(Session& s, const std::string& init, const std::string& data_path) {
  const fs::path dir = *s.run_dir();
  Checkpoint ck = load_checkpoint(init);
  if (ck.model.stage() != Stage::kPretrained) {
    throw ConfigError(fmt::format("adapt needs a pretrained checkpoint, '{}' is {}", init,
                                  stage_name(ck.model.stage())));
  }
  Model m = ck.model.has_gaznet()
                ? std::move(ck.model)
                : make_gain_model(ck.model, s.cfg.model, derive_seed(s.cfg.train.seed, "model/init"));
  if (!m.has_gaznet()) throw ConfigError("adapt needs a gazetteer network (integration none)");
  const Dataset data = s.data_or(data_path, &Session::task_train);
  TrainLog log;
  stage1_adapt(m, data, s.cfg.train, &log);
  save_checkpoint(m, s.cfg.train, (dir / "adapted.ckpt").string());
  write_json(dir / "stage1_log.json", log_json(log));
  s.out << fmt::format("adapted on {} sentences, final loss {:.6f}\n", data.size(),
                       log.epochs.empty() ? 0.0 : log.epochs.back().mean_loss);
}

// Continues an adapted or trained model, or builds one from a pretrained
// encoder (running stage 1 unless skipped).
RunResult train_from(Session& s, const Checkpoint& ck, const Dataset& train, const Dataset* val,
                     const MatchTrie& trie, const TrainConfig& cfg) {
  if (ck.model.stage() == Stage::kPretrained && !ck.model.has_gaznet()) {
    return train_gain(ck.model, train, val, trie, s.cfg.model, cfg);
  }
  if (ck.model.stage() == Stage::kPretrained && !cfg.skip_stage1) {
    throw ConfigError("checkpoint has untrained gazetteer heads; run adapt first or set "
                      "train.skip_stage1=true");
  }
  RunResult r{parse_checkpoint(serialize_checkpoint(ck.model, ck.train)).model, {}, {}, {}, 0.0};
  if (!(r.model.config() == s.cfg.model)) {
    spdlog::warn("continuing with the checkpoint's model config, not the resolved one");
  }
  stage2_train(r.model, train, val, trie, cfg, &r.stage2);
  if (val != nullptr) r.val_report = evaluate_model(r.model, *val, &trie, cfg.match_policy);
  r.mean_lambda = r.model.mean_lambda();
  return r;
}

void train_cmd(Session& s, const std::string& init, const std::string& data_path,
               const std::string& val_path, const std::string& gaz_path, bool cv) {
  const Checkpoint ck = load_checkpoint(init);
  const fs::path dir = *s.run_dir();
  const bool synthetic = data_path.empty();
  const Dataset train = s.data_or(data_path, &Session::task_train);
  std::optional<Dataset> val;
  if (!val_path.empty()) val = read_conll(val_path);
  else if (synthetic) val = s.task_val();
  const MatchTrie trie(s.gazetteer(gaz_path, synthetic), s.cfg.fold_case);

  if (!cv) {
    RunResult r = train_from(s, ck, train, val ? &*val : nullptr, trie, s.cfg.train);
    save_checkpoint(r.model, s.cfg.train, (dir / "model.ckpt").string());
    write_json(dir / "train_log.json", {{"stage1", log_json(r.stage1)},
                                        {"stage2", log_json(r.stage2)},
                                        {"mean_sigmoid_lambda", r.mean_lambda}});
    if (val) {
      write_json(dir / "val_report.json", report_json(r.val_report));
      s.out << report_table(r.val_report);
    }
    return;
  }

  // k-fold: fold i validates on fold i and trains on the rest; the fold
  // models are then ensembled on --val when one is available.
  const FoldPlan plan = kfold_split(train, s.cfg.folds, derive_seed(s.cfg.seed, "cv/folds"));
  std::vector<PredictionSet> members;
  json folds = json::array();
  for (size_t i = 0; i < plan.folds.size(); ++i) {
    const auto [fold_train, fold_val] = fold_datasets(train, plan, i);
    TrainConfig cfg = s.cfg.train;
    cfg.seed = derive_seed(s.cfg.train.seed, fmt::format("cv/{}", i));
    spdlog::info("fold {}/{}: {} train, {} val", i + 1, plan.folds.size(), fold_train.size(),
                 fold_val.size());
    RunResult r = train_from(s, ck, fold_train, &fold_val, trie, cfg);
    const std::string id = fmt::format("fold{}", i);
    save_checkpoint(r.model, cfg, (dir / (id + ".ckpt")).string());
    json entry = {{"fold", i}, {"val_macro_f1", r.val_report.macro_f1},
                  {"stage2", log_json(r.stage2)}};
    if (val) {
      members.push_back(model_predictions(r.model, *val, &trie, cfg.match_policy, id));
      save_predictions(members.back(), (dir / (id + "_predictions.jsonl")).string());
      const EvalReport rep = evaluate_model(r.model, *val, &trie, cfg.match_policy);
      entry["heldout_macro_f1"] = rep.macro_f1;
    }
    folds.push_back(entry);
  }
  json summary = {{"folds", folds}};
  if (val) {
    // Softmax and span members are averaged, CRF members voted.
    const std::string mode = members.front().sentences.empty() ||
                                     members.front().sentences.front().logits.allocated()
                                 ? "avg-logits"
                                 : "vote";
    const auto tags = ensemble_tags(members, mode, {}, s.cfg.model.span_max_width);
    const EvalReport rep = evaluate(with_tags(*val, tags), *val);
    summary["ensemble"] = {{"mode", mode}, {"report", report_json(rep)}};
    s.out << fmt::format("{}-fold {} ensemble\n", plan.folds.size(), mode);
    s.out << report_table(rep);
  }
  write_json(dir / "cv_summary.json", summary);
}

void eval_cmd(Session& s, const std::string& model_path, const std::string& data_path,
              const std::string& gaz_path) {
  const fs::path dir = *s.run_dir();
  Checkpoint ck = load_checkpoint(model_path);
  const bool synthetic = data_path.empty();
  const Dataset data = s.data_or(data_path, &Session::task_val);
  std::optional<MatchTrie> trie;
  if (ck.model.has_gaznet()) trie.emplace(s.gazetteer(gaz_path, synthetic), s.cfg.fold_case);
  const MatchTrie* t = trie ? &*trie : nullptr;
  const MatchPolicy policy = s.cfg.train.match_policy;
  const auto preds = predict_dataset(ck.model, data, t, policy);
  std::vector<std::vector<int>> tags;
  for (const auto& p : preds) tags.push_back(p.tags);
  const Dataset out = with_tags(data, tags);
  const EvalReport rep = evaluate(out, data);
  write_json(dir / "report.json", report_json(rep));
  write_conll(dir / "predictions.conll", out);
  save_predictions(model_predictions(ck.model, data, t, policy,
                                     fs::path(model_path).stem().string()),
                   (dir / "predictions.jsonl").string());
  s.out << report_table(rep);
}

void ensemble_cmd(Session& s, const std::string& mode, const std::vector<std::string>& inputs,
                  const std::vector<double>& weights, const std::string& gold_path) {
  if (mode != "avg-logits" && mode != "vote") {
    throw ConfigError(fmt::format("unknown ensemble mode '{}'", mode));
  }
  const fs::path dir = *s.run_dir();
  std::vector<PredictionSet> members;
  for (const auto& p : inputs) members.push_back(load_predictions(p));
  if (!weights.empty() && mode == "avg-logits") {
    throw ConfigError("--weights applies to --mode vote only");
  }
  const auto tags = ensemble_tags(members, mode, weights, s.cfg.model.span_max_width);
  Dataset like;
  for (const auto& sent : members.front().sentences) like.sentences.push_back({sent.tokens, {}});
  const Dataset out = with_tags(like, tags);
  write_conll(dir / "ensemble.conll", out);
  PredictionSet set{fmt::format("ensemble-{}", mode), 1.0, false, {}};
  for (const auto& sent : out.sentences) set.sentences.push_back({sent.tokens, sent.tags, {}});
  save_predictions(set, (dir / "ensemble.jsonl").string());
  if (!gold_path.empty()) {
    const Dataset gold = read_conll(gold_path);
    const EvalReport rep = evaluate(out, gold);
    write_json(dir / "report.json", report_json(rep));
    s.out << report_table(rep);
  } else {
    s.out << fmt::format("{} sentences ensembled from {} members\n", out.size(), members.size());
  }
}

void sweep_cmd(Session& s) {
  if (s.cfg.model.integration != IntegrationMode::kWeightedSum) {
    throw ConfigError("sweep-coverage needs model.integration=weighted_sum");
  }
  const fs::path dir = *s.run_dir();
  const GazetteerTask& task = s.task();
  const Model pre = pretrain_encoder(task.pretrain, s.cfg.model, s.cfg.train);
  const auto rows = sweep_coverage(task, pre, s.cfg.sweep_rates, s.cfg.model, s.cfg.train);
  write_json(dir / "sweep.json", sweep_json(rows));
  s.out << sweep_table(rows);
}

int gradcheck_cmd(Session& s, double h) {
  auto entries = op_gradient_suite(h, s.cfg.seed);
  for (auto& e : stage2_gradient_suite(h, s.cfg.seed)) entries.push_back(std::move(e));
  double worst = 0.0;
  json rows = json::array();
  for (const auto& e : entries) {
    worst = std::max(worst, e.result.max_relative_error);
    s.out << fmt::format("{:<28} {:.3e}\n", e.name, e.result.max_relative_error);
    rows.push_back({{"name", e.name},
                    {"max_relative_error", e.result.max_relative_error},
                    {"coordinates", e.result.coordinates}});
  }
  s.out << fmt::format("max relative error {:.3e} (h = {:g}, tolerance {:g})\n", worst, h,
                       kGradTolerance);
  if (auto dir = s.run_dir(false)) {
    write_json(*dir / "gradcheck.json", {{"step", h}, {"max_relative_error", worst},
                                         {"checks", rows}});
  }
  return worst < kGradTolerance ? kExitOk : kExitNumeric;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Session s{out, err, {}, {}, {}, {}, {}, {}, {}, {}};
  CLI::App app{"Gazetteer-adapted NER: data, training, ensembles and experiments", "gain"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", s.config_path, "JSON run configuration");
  app.add_option("--seed", s.seed, "master seed");
  app.add_option("--out", s.out_dir, "run directory for outputs");
  app.add_option("--set", s.sets, "override a setting, e.g. train.alpha=10");

  std::function<int()> action;
  auto on = [&](CLI::App* cmd, std::string name, std::function<int()> fn) {
    cmd->callback([&s, &action, name = std::move(name), fn = std::move(fn)] {
      s.command = name;
      action = fn;
    });
  };
  auto done = [](auto f) {
    return [f] {
      f();
      return kExitOk;
    };
  };

  std::string gaz_path, data_path, val_path, init_path, model_path, tokens, policy, mode, gold;
  std::vector<std::string> data_paths, inputs;
  std::vector<double> weights, rates;
  std::optional<double> coverage;
  bool all_columns = false, whole_task = false, append = false, lenient = false, cv = false;
  double step = 1e-5;

  auto* gaz = app.add_subcommand("gazetteer", "build, match against or measure a gazetteer");
  gaz->require_subcommand(1);
  auto* gbuild = gaz->add_subcommand("build", "collect gold entities into a gazetteer");
  gbuild->add_option("--data", data_paths, "CoNLL files")->required();
  gbuild->add_option("--coverage", coverage, "keep this fraction of entities per label")
      ->check(CLI::Range(0.0, 1.0));
  on(gbuild, "gazetteer build", done([&] { gazetteer_build(s, data_paths, coverage); }));
  auto* gmatch = gaz->add_subcommand("match", "print one-hot gazetteer features of a sentence");
  gmatch->add_option("--gazetteer", gaz_path, "gazetteer TSV");
  gmatch->add_option("--tokens", tokens, "space-separated sentence")->required();
  gmatch->add_option("--policy", policy, "longest or all");
  gmatch->add_flag("--all-columns", all_columns, "print all 13 columns");
  on(gmatch, "gazetteer match",
     done([&] { gazetteer_match(s, gaz_path, tokens, policy, all_columns); }));
  auto* gcov = gaz->add_subcommand("coverage", "coverage rate of a gazetteer on a dataset");
  gcov->add_option("--gazetteer", gaz_path, "gazetteer TSV");
  gcov->add_option("--data", data_path, "CoNLL file")->required();
  on(gcov, "gazetteer coverage", done([&] { gazetteer_coverage(s, gaz_path, data_path); }));

  auto* data = app.add_subcommand("data", "synthesize, augment or validate datasets");
  data->require_subcommand(1);
  auto* dsynth = data->add_subcommand("synth", "generate a synthetic corpus");
  dsynth->add_flag("--task", whole_task, "write the full gazetteer-dependent task");
  dsynth->add_option("--gazetteer", gaz_path, "entity source for synth.entity_source=gazetteer");
  on(dsynth, "data synth", done([&] { data_synth(s, whole_task, gaz_path); }));
  auto* daug = data->add_subcommand("augment", "replace entities with gazetteer surfaces");
  daug->add_option("--data", data_path, "CoNLL file")->required();
  daug->add_option("--gazetteer", gaz_path, "gazetteer TSV");
  daug->add_flag("--append", append, "prepend the original sentences");
  on(daug, "data augment", done([&] { data_augment(s, data_path, gaz_path, append); }));
  auto* dval = data->add_subcommand("validate", "parse a CoNLL file and check BIO validity");
  dval->add_option("--data", data_path, "CoNLL file")->required();
  dval->add_flag("--lenient", lenient, "repair orphan I- tags instead of failing");
  on(dval, "data validate", done([&] { data_validate(s, data_path, lenient); }));

  auto* pre = app.add_subcommand("pretrain", "pretrain the encoder");
  pre->add_option("--data", data_path, "CoNLL file (default: synthetic pretraining set)");
  on(pre, "pretrain", done([&] { pretrain_cmd(s, data_path); }));

  auto* adapt = app.add_subcommand("adapt", "stage 1: align the gazetteer network");
  adapt->add_option("--init", init_path, "pretrained checkpoint")->required();
  adapt->add_option("--data", data_path, "CoNLL file (default: synthetic train set)");
  on(adapt, "adapt", done([&] { adapt_cmd(s, init_path, data_path); }));

  auto* train = app.add_subcommand("train", "stage 2: train with gazetteer features");
  train->add_option("--init", init_path, "pretrained or adapted checkpoint")->required();
  train->add_option("--data", data_path, "CoNLL file (default: synthetic train set)");
  train->add_option("--val", val_path, "CoNLL validation file");
  train->add_option("--gazetteer", gaz_path, "gazetteer TSV");
  train->add_flag("--cv", cv, "k-fold cross-validation (k = folds)");
  on(train, "train",
     done([&] { train_cmd(s, init_path, data_path, val_path, gaz_path, cv); }));

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  ev->add_option("--model", model_path, "checkpoint")->required();
  ev->add_option("--data", data_path, "CoNLL file (default: synthetic validation set)");
  ev->add_option("--gazetteer", gaz_path, "gazetteer TSV");
  on(ev, "eval", done([&] { eval_cmd(s, model_path, data_path, gaz_path); }));

  auto* ens = app.add_subcommand("ensemble", "combine prediction files");
  ens->add_option("--mode", mode, "avg-logits or vote")->required();
  ens->add_option("--inputs", inputs, "prediction JSONL files")->required();
  ens->add_option("--weights", weights, "vote weights, one per input")->delimiter(',');
  ens->add_option("--gold", gold, "CoNLL file to score against");
  on(ens, "ensemble", done([&] { ensemble_cmd(s, mode, inputs, weights, gold); }));

  auto* sweep = app.add_subcommand("sweep-coverage", "macro-F1 and sigmoid(lambda) by coverage");
  sweep->add_option("--rates", rates, "coverage rates, e.g. 0,0.5,1")->delimiter(',');
  sweep->callback([&] {
    s.command = "sweep-coverage";
    s.defaults = {"model.integration=\"weighted_sum\""};
    action = done([&] { sweep_cmd(s); });
  });

  auto* grad = app.add_subcommand("gradcheck", "finite-difference checks of every gradient");
  grad->add_option("--step", step, "central difference step")->check(CLI::PositiveNumber);
  on(grad, "gradcheck", [&] { return gradcheck_cmd(s, step); });

  // Name the offending word instead of CLI11's generic complaint.
  for (const auto& a : args) {
    if (a.empty() || a[0] == '-') break;
    const auto known = app.get_subcommands([&a](CLI::App* c) { return c->check_name(a); });
    if (known.empty()) {
      err << fmt::format("error: unknown subcommand '{}'\n\n", a) << app.help();
      return kExitUsage;
    }
    break;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    s.resolve();
    if (!rates.empty()) {
      s.cfg.sweep_rates = rates;
      for (double r : rates) {
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(fmt::format("rate {} outside [0, 1]", r));
      }
    }
    return action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run(int argc, const char* const* argv) {
  spdlog::set_default_logger(spdlog::stderr_logger_mt("gain"));
  try {
    configure_logging_from_env("info");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace gain
