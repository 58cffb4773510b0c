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

#include "gain/train.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gain/errors.h"

namespace gain {

using num::ParamGroup;
using num::Tensor;
using num::Var;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

std::string_view adaptation_loss_name(AdaptationLoss loss) {
  return loss == AdaptationLoss::kKl ? "kl" : "mse";
}

AdaptationLoss parse_adaptation_loss(std::string_view name) {
  if (name == "kl") return AdaptationLoss::kKl;
  if (name == "mse") return AdaptationLoss::kMse;
  throw ConfigError(fmt::format("unknown adaptation loss '{}'", name));
}

std::string_view l1_source_name(L1Source source) {
  return source == L1Source::kGold ? "gold" : "matched";
}

L1Source parse_l1_source(std::string_view name) {
  if (name == "gold") return L1Source::kGold;
  if (name == "matched") return L1Source::kMatched;
  throw ConfigError(fmt::format("unknown stage-2 L1 source '{}'", name));
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError(fmt::format("alpha must be >= 0, got {}", alpha));
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(pretrain_learning_rate > 0.0)) throw ConfigError("pretrain learning rate must be positive");
  if (vocab_min_count == 0) throw ConfigError("vocab_min_count must be positive");
  optimizer.validate();
}

double TrainConfig::default_alpha(ClassifierKind kind) {
  return kind == ClassifierKind::kCrf ? 100.0 : 5.0;
}

json train_config_json(const TrainConfig& cfg) {
  json rates = json::object();
  for (const auto& [group, lr] : cfg.optimizer.learning_rates) {
    rates[std::string(num::group_name(group))] = lr;
  }
  return {
      {"alpha", cfg.alpha},
      {"pretrain_epochs", cfg.pretrain_epochs},
      {"stage1_epochs", cfg.stage1_epochs},
      {"stage2_epochs", cfg.stage2_epochs},
      {"batch_size", cfg.batch_size},
      {"dropout", cfg.dropout},
      {"pretrain_learning_rate", cfg.pretrain_learning_rate},
      {"vocab_min_count", cfg.vocab_min_count},
      {"learning_rates", rates},
      {"beta1", cfg.optimizer.beta1},
      {"beta2", cfg.optimizer.beta2},
      {"epsilon", cfg.optimizer.epsilon},
      {"weight_decay", cfg.optimizer.weight_decay},
      {"adaptation_loss", adaptation_loss_name(cfg.adaptation_loss)},
      {"stage2_l1_source", l1_source_name(cfg.stage2_l1_source)},
      {"skip_stage1", cfg.skip_stage1},
      {"match_policy", policy_name(cfg.match_policy)},
      {"seed", cfg.seed},
  };
}

namespace {

template <typename T>
T get_as(const json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("bad value for '{}': {}", key, e.what()));
  }
}

void require_object(const json& j, std::string_view what) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", what));
}

}  // namespace

TrainConfig train_config_from_json(const json& j, TrainConfig cfg) {
  require_object(j, "train config");
  for (const auto& [key, v] : j.items()) {
    if (key == "alpha") cfg.alpha = get_as<double>(v, key);
    else if (key == "pretrain_epochs") cfg.pretrain_epochs = get_as<size_t>(v, key);
    else if (key == "stage1_epochs") cfg.stage1_epochs = get_as<size_t>(v, key);
    else if (key == "stage2_epochs") cfg.stage2_epochs = get_as<size_t>(v, key);
    else if (key == "batch_size") cfg.batch_size = get_as<size_t>(v, key);
    else if (key == "dropout") cfg.dropout = get_as<double>(v, key);
    else if (key == "pretrain_learning_rate") cfg.pretrain_learning_rate = get_as<double>(v, key);
    else if (key == "vocab_min_count") cfg.vocab_min_count = get_as<size_t>(v, key);
    else if (key == "learning_rates") {
      require_object(v, "learning_rates");
      for (const auto& [group, lr] : v.items()) {
        cfg.optimizer.learning_rates[num::parse_group(group)] = get_as<double>(lr, group);
      }
    } else if (key == "beta1") cfg.optimizer.beta1 = get_as<double>(v, key);
    else if (key == "beta2") cfg.optimizer.beta2 = get_as<double>(v, key);
    else if (key == "epsilon") cfg.optimizer.epsilon = get_as<double>(v, key);
    else if (key == "weight_decay") cfg.optimizer.weight_decay = get_as<double>(v, key);
    else if (key == "adaptation_loss") cfg.adaptation_loss = parse_adaptation_loss(get_as<std::string>(v, key));
    else if (key == "stage2_l1_source") cfg.stage2_l1_source = parse_l1_source(get_as<std::string>(v, key));
    else if (key == "skip_stage1") cfg.skip_stage1 = get_as<bool>(v, key);
    else if (key == "match_policy") cfg.match_policy = parse_policy(get_as<std::string>(v, key));
    else if (key == "seed") cfg.seed = get_as<uint64_t>(v, key);
    else throw ConfigError(fmt::format("unknown train setting '{}'", key));
  }
  cfg.validate();
  return cfg;
}

json model_config_json(const ModelConfig& cfg) {
  return {{"embed_dim", cfg.embed_dim},
          {"hidden", cfg.hidden},
          {"gaz_hidden", cfg.gaz_hidden},
          {"integration", integration_name(cfg.integration)},
          {"classifier", classifier_name(cfg.classifier)},
          {"span_max_width", cfg.span_max_width}};
}

ModelConfig model_config_from_json(const json& j, ModelConfig cfg) {
  require_object(j, "model config");
  for (const auto& [key, v] : j.items()) {
    if (key == "embed_dim") cfg.embed_dim = get_as<size_t>(v, key);
    else if (key == "hidden") cfg.hidden = get_as<size_t>(v, key);
    else if (key == "gaz_hidden") cfg.gaz_hidden = get_as<size_t>(v, key);
    else if (key == "integration") cfg.integration = parse_integration(get_as<std::string>(v, key));
    else if (key == "classifier") cfg.classifier = parse_classifier(get_as<std::string>(v, key));
    else if (key == "span_max_width") cfg.span_max_width = get_as<size_t>(v, key);
    else throw ConfigError(fmt::format("unknown model setting '{}'", key));
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Training loops

namespace {

using LossFn = std::function<Var(const Sentence&, const ForwardContext&)>;

// Runs `epochs` passes of minibatch AdamW over `data`; `after_epoch` may
// append validation results to the record.
void run_epochs(Model& model, const Dataset& data, size_t epochs, const TrainConfig& cfg,
                const num::OptimizerConfig& opt, std::string_view label, const LossFn& loss_fn,
                TrainLog* log, const std::function<void(EpochRecord&)>& after_epoch = {}) {
  if (data.empty()) throw DataError(fmt::format("{}: empty training set", label));
  Rng order_rng(derive_seed(cfg.seed, fmt::format("{}/order", label)));
  Rng dropout_rng(derive_seed(cfg.seed, fmt::format("{}/dropout", label)));
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const ForwardContext ctx{true, cfg.dropout, &dropout_rng};

  for (size_t epoch = 1; epoch <= epochs; ++epoch) {
    order_rng.shuffle(std::span<size_t>(order));
    double total = 0.0;
    size_t tokens = 0;
    for (size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      model.params().zero_grad();
      for (size_t k = begin; k < end; ++k) {
        const Sentence& s = data.sentences[order[k]];
        Var loss = loss_fn(s, ctx);
        const double v = loss.item();
        if (!std::isfinite(v)) {
          throw NumericError(fmt::format("{}: non-finite loss at epoch {}, batch {}", label,
                                         epoch, begin / cfg.batch_size + 1));
        }
        total += v * static_cast<double>(s.size());
        tokens += s.size();
        num::backward(num::scale(loss, inv));
      }
      num::adamw_step(model.params(), opt);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = total / static_cast<double>(tokens);
    if (after_epoch) after_epoch(rec);
    spdlog::info("{} epoch {}/{}: loss {:.6f}{}", label, epoch, epochs, rec.mean_loss,
                 std::isnan(rec.val_macro_f1) ? ""
                                              : fmt::format(", val macro-F1 {:.4f}",
                                                            rec.val_macro_f1));
    if (log != nullptr) log->epochs.push_back(rec);
  }
}

FeatureMatrix gold_features(const Sentence& s) { return tags_to_onehot(s.tags); }

Var adaptation_term(Model& model, const Var& e, const Var& g, AdaptationLoss loss) {
  Var gt = model.project_g(g);
  Var et = model.project_e(e);
  return loss == AdaptationLoss::kKl ? num::kl_pair_loss(gt, et) : num::mse_loss(gt, et);
}

std::vector<Tensor> snapshot(const Model& model) {
  std::vector<Tensor> out;
  for (const auto& p : model.params()) out.push_back(p->value);
  return out;
}

void restore(Model& model, const std::vector<Tensor>& values) {
  size_t i = 0;
  for (const auto& p : model.params()) p->value = values[i++];
}

}  // namespace

Model pretrain_encoder(const Dataset& data, const ModelConfig& model_cfg,
                       const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  ModelConfig mc = model_cfg;
  mc.integration = IntegrationMode::kNone;
  mc.classifier = ClassifierKind::kSoftmax;
  Model model(mc, Vocab::build(data, cfg.vocab_min_count), derive_seed(cfg.seed, "pretrain/init"));
  num::OptimizerConfig opt = cfg.optimizer;
  for (auto& [group, lr] : opt.learning_rates) lr = cfg.pretrain_learning_rate;
  run_epochs(model, data, cfg.pretrain_epochs, cfg, opt, "pretrain",
             [&model](const Sentence& s, const ForwardContext& ctx) {
               return model.classifier_loss(model.logits(model.encode(s.tokens, ctx), ctx),
                                            s.tags);
             },
             log);
  model.set_stage(Stage::kPretrained);
  return model;
}

Model make_gain_model(const Model& pretrained, const ModelConfig& model_cfg, uint64_t seed) {
  if (pretrained.stage() == Stage::kInitial) {
    throw ContractError("make_gain_model: encoder is not pretrained");
  }
  Model model(model_cfg, pretrained.vocab(), seed);
  model.adopt_encoder(pretrained);
  model.set_stage(Stage::kPretrained);
  return model;
}

Var stage1_loss(Model& model, const Sentence& s, AdaptationLoss loss,
                const ForwardContext& ctx) {
  Var e = model.encode(s.tokens, ctx);
  Var g = model.gaznet(gold_features(s), ctx);
  return adaptation_term(model, e, g, loss);
}

void stage1_adapt(Model& model, const Dataset& data, const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  if (model.stage() != Stage::kPretrained) {
    throw ContractError(fmt::format("stage1_adapt: expected a pretrained model, got '{}'",
                                    stage_name(model.stage())));
  }
  if (!model.has_gaznet()) throw ContractError("stage1_adapt: model has no gazetteer network");
  auto& params = model.params();
  for (const auto& p : params) p->trainable = false;
  params.set_trainable(ParamGroup::kGazetteerNet, true);
  params.set_trainable_prefix("head_e.", true);
  params.set_trainable_prefix("head_g.", true);
  run_epochs(model, data, cfg.stage1_epochs, cfg, cfg.optimizer, "stage1",
             [&](const Sentence& s, const ForwardContext& ctx) {
               return stage1_loss(model, s, cfg.adaptation_loss, ctx);
             },
             log);
  for (const auto& p : params) p->trainable = true;
  model.set_stage(Stage::kAdapted);
}

Stage2Loss stage2_loss(Model& model, const Sentence& s, const FeatureMatrix& matched,
                       const TrainConfig& cfg, const ForwardContext& ctx) {
  Stage2Loss out;
  Var e = model.encode(s.tokens, ctx);
  if (!model.has_gaznet()) {
    out.l1 = Var::constant(Tensor::scalar(0.0));
    out.l2 = model.classifier_loss(model.logits(e, ctx), s.tags);
    out.total = out.l2;
    return out;
  }
  Var g = model.gaznet(matched, ctx);
  out.l2 = model.classifier_loss(model.logits(model.integrate(e, g), ctx), s.tags);
  Var g_r = cfg.stage2_l1_source == L1Source::kGold ? model.gaznet(gold_features(s), ctx) : g;
  out.l1 = adaptation_term(model, e, g_r, cfg.adaptation_loss);
  out.total = num::add(num::scale(out.l1, cfg.alpha), out.l2);
  return out;
}

void stage2_train(Model& model, const Dataset& data, const Dataset* val, const MatchTrie& trie,
                  const TrainConfig& cfg, TrainLog* log) {
  cfg.validate();
  const bool ready = model.stage() == Stage::kAdapted ||
                     ((cfg.skip_stage1 || !model.has_gaznet()) &&
                      model.stage() == Stage::kPretrained);
  if (!ready) {
    throw ContractError(fmt::format("stage2_train: model stage '{}' not ready",
                                    stage_name(model.stage())));
  }
  for (const auto& p : model.params()) p->trainable = true;

  std::vector<FeatureMatrix> features;
  if (model.has_gaznet()) {
    features.reserve(data.size());
    for (const auto& s : data.sentences) {
      features.push_back(match_features(trie, s.tokens, cfg.match_policy));
    }
  }
  std::unordered_map<const Sentence*, size_t> index;
  for (size_t i = 0; i < data.size(); ++i) index[&data.sentences[i]] = i;

  std::vector<Tensor> best;
  TrainLog local;
  TrainLog& record = log != nullptr ? *log : local;
  run_epochs(
      model, data, cfg.stage2_epochs, cfg, cfg.optimizer, "stage2",
      [&](const Sentence& s, const ForwardContext& ctx) {
        static const FeatureMatrix kNone;
        const FeatureMatrix& f = model.has_gaznet() ? features[index.at(&s)] : kNone;
        return stage2_loss(model, s, f, cfg, ctx).total;
      },
      &record,
      [&](EpochRecord& rec) {
        if (val == nullptr || val->empty()) return;
        rec.val_macro_f1 = evaluate_model(model, *val, &trie, cfg.match_policy).macro_f1;
        if (record.best_epoch == 0 || rec.val_macro_f1 > record.best_val_f1) {
          record.best_epoch = rec.epoch;
          record.best_val_f1 = rec.val_macro_f1;
          best = snapshot(model);
        }
      });
  if (!best.empty()) restore(model, best);
  model.set_stage(Stage::kTrained);
}

std::vector<Prediction> predict_dataset(Model& model, const Dataset& data,
                                        const MatchTrie* trie, MatchPolicy policy) {
  if (model.has_gaznet() && trie == nullptr) {
    throw ContractError("predict_dataset: gazetteer trie required");
  }
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (const auto& s : data.sentences) {
    if (model.has_gaznet()) {
      const FeatureMatrix f = match_features(*trie, s.tokens, policy);
      out.push_back(model.predict(s.tokens, &f));
    } else {
      out.push_back(model.predict(s.tokens, nullptr));
    }
  }
  return out;
}

EvalReport evaluate_model(Model& model, const Dataset& data, const MatchTrie* trie,
                          MatchPolicy policy) {
  std::vector<std::vector<int>> tags;
  for (auto& p : predict_dataset(model, data, trie, policy)) tags.push_back(std::move(p.tags));
  return evaluate(tags, data);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::string_view kMagic = "GAINCKPT";

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(size_t n, std::string_view what) {
    if (n > bytes_.size() - pos_) {
      throw DataError(fmt::format("checkpoint truncated while reading {}", what));
    }
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  uint64_t u64(std::string_view what) { return little_endian(take(8, what)); }
  uint32_t u32(std::string_view what) {
    return static_cast<uint32_t>(little_endian(take(4, what)));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  static uint64_t little_endian(std::string_view b) {
    uint64_t v = 0;
    for (size_t i = b.size(); i-- > 0;) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  std::string_view bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Model& model, const TrainConfig& cfg) {
  const json meta = {{"model", model_config_json(model.config())},
                     {"vocab", model.vocab().words()},
                     {"stage", stage_name(model.stage())},
                     {"seed", model.seed()},
                     {"train", train_config_json(cfg)}};
  const std::string meta_text = meta.dump();

  std::string out(kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(meta_text.size()));
  out += meta_text;
  put_u32(out, static_cast<uint32_t>(model.params().size()));
  uint64_t offset = 0;
  for (const auto& p : model.params()) {
    put_u32(out, static_cast<uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<uint32_t>(p->value.ndim()));
    for (size_t d : p->value.shape()) put_u64(out, d);
    put_u64(out, offset);
    offset += 8 * p->value.size();
  }
  put_u64(out, offset);
  for (const auto& p : model.params()) {
    for (double v : p->value.values()) put_u64(out, std::bit_cast<uint64_t>(v));
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size(), "magic") != kMagic) throw DataError("not a GAIN checkpoint");
  const uint32_t version = in.u32("version");
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("checkpoint version {} is not supported (expected {})",
                                version, kCheckpointVersion));
  }
  const uint32_t meta_len = in.u32("metadata length");
  json meta;
  try {
    meta = json::parse(in.take(meta_len, "metadata"));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("checkpoint metadata is not valid JSON: {}", e.what()));
  }

  struct Entry {
    std::string name;
    std::vector<size_t> shape;
    uint64_t offset;
  };
  std::vector<Entry> entries(in.u32("entry count"));
  for (auto& e : entries) {
    e.name = std::string(in.take(in.u32("name length"), "name"));
    const uint32_t ndim = in.u32("rank");
    if (ndim > 8) throw DataError(fmt::format("parameter '{}' has rank {}", e.name, ndim));
    for (uint32_t d = 0; d < ndim; ++d) e.shape.push_back(in.u64("dimension"));
    e.offset = in.u64("offset");
  }
  const uint64_t data_len = in.u64("data length");
  const std::string_view data = in.take(data_len, "parameter data");
  if (!in.done()) throw DataError("checkpoint has trailing bytes");

  try {
    std::vector<std::string> words = meta.at("vocab").get<std::vector<std::string>>();
    Checkpoint ck{Model(model_config_from_json(meta.at("model")), Vocab(std::move(words)),
                        meta.at("seed").get<uint64_t>()),
                  train_config_from_json(meta.at("train"))};
    ck.model.set_stage(parse_stage(meta.at("stage").get<std::string>()));
    if (entries.size() != ck.model.params().size()) {
      throw DataError(fmt::format("checkpoint has {} parameters, model expects {}",
                                  entries.size(), ck.model.params().size()));
    }
    for (const auto& e : entries) {
      if (!ck.model.params().contains(e.name)) {
        throw DataError(fmt::format("checkpoint parameter '{}' unknown to the model", e.name));
      }
      Tensor& value = ck.model.params().get(e.name).value;
      if (value.shape() != e.shape) {
        throw DataError(fmt::format("checkpoint parameter '{}' has the wrong shape", e.name));
      }
      if (e.offset > data.size() || 8 * value.size() > data.size() - e.offset) {
        throw DataError(fmt::format("checkpoint parameter '{}' exceeds the data block", e.name));
      }
      Reader r(data.substr(e.offset, 8 * value.size()));
      for (double& v : value.values()) v = std::bit_cast<double>(r.u64("value"));
    }
    return ck;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("checkpoint metadata incomplete: {}", e.what()));
  } catch (const ConfigError& e) {
    throw DataError(fmt::format("checkpoint metadata invalid: {}", e.what()));
  }
}

void save_checkpoint(const Model& model, const TrainConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot write checkpoint '{}'", path));
  const std::string bytes = serialize_checkpoint(model, cfg);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError(fmt::format("failed writing checkpoint '{}'", path));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError(fmt::format("cannot read checkpoint '{}'", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace gain
