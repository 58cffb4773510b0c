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

#ifndef GAIN_TRAIN_H_
#define GAIN_TRAIN_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gain/corpus.h"
#include "gain/gazetteer.h"
#include "gain/metrics.h"
#include "gain/model.h"
#include "gain/num/optim.h"

namespace gain {

enum class AdaptationLoss { kKl, kMse };
// Which one-hot rows feed the gazetteer network inside the stage-2 L1 term.
enum class L1Source { kGold, kMatched };

std::string_view adaptation_loss_name(AdaptationLoss loss);
AdaptationLoss parse_adaptation_loss(std::string_view name);
std::string_view l1_source_name(L1Source source);
L1Source parse_l1_source(std::string_view name);

struct TrainConfig {
  double alpha = 5.0;
  size_t pretrain_epochs = 10;
  size_t stage1_epochs = 5;
  size_t stage2_epochs = 20;
  size_t batch_size = 16;
  double dropout = 0.1;
  double pretrain_learning_rate = 2e-3;
  size_t vocab_min_count = 2;
  num::OptimizerConfig optimizer;
  AdaptationLoss adaptation_loss = AdaptationLoss::kKl;
  L1Source stage2_l1_source = L1Source::kGold;
  // Lets stage 2 start from a pretrained (not adapted) bundle.
  bool skip_stage1 = false;
  MatchPolicy match_policy = MatchPolicy::kLongest;
  uint64_t seed = 0;

  void validate() const;
  // 100 for CRF, 5 otherwise.
  static double default_alpha(ClassifierKind kind);
};

nlohmann::json train_config_json(const TrainConfig& cfg);
// Missing keys keep their defaults; unknown keys are ConfigErrors.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json model_config_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

struct EpochRecord {
  size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double val_macro_f1 = std::numeric_limits<double>::quiet_NaN();
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  size_t best_epoch = 0;  // 0 when no validation set was given
  double best_val_f1 = std::numeric_limits<double>::quiet_NaN();
};

// Trains encoder plus a temporary softmax head with cross-entropy. The
// returned model has no gazetteer network; only its "encoder." parameters
// and vocabulary are meant to be reused (see make_gain_model).
Model pretrain_encoder(const Dataset& data, const ModelConfig& model_cfg,
                       const TrainConfig& cfg, TrainLog* log = nullptr);

// Fresh model with `model_cfg`'s heads whose encoder and vocabulary come
// from `pretrained`. Stage marker: pretrained.
Model make_gain_model(const Model& pretrained, const ModelConfig& model_cfg, uint64_t seed);

// Stage 1: gazetteer network, head_e and head_g learn to align g_r^t with
// e^t on gold one-hot features while encoder and classifier stay frozen.
void stage1_adapt(Model& model, const Dataset& data, const TrainConfig& cfg,
                  TrainLog* log = nullptr);

// Stage 2: every parameter trained on alpha * L1 + L2 with matched
// gazetteer features. With `val`, the best epoch by macro-F1 is restored.
void stage2_train(Model& model, const Dataset& data, const Dataset* val,
                  const MatchTrie& trie, const TrainConfig& cfg, TrainLog* log = nullptr);

// Per-sentence loss terms, exposed for checks.
num::Var stage1_loss(Model& model, const Sentence& sentence, AdaptationLoss loss,
                     const ForwardContext& ctx);

struct Stage2Loss {
  num::Var l1;  // zero constant without a gazetteer network
  num::Var l2;
  num::Var total;
};
Stage2Loss stage2_loss(Model& model, const Sentence& sentence, const FeatureMatrix& matched,
                       const TrainConfig& cfg, const ForwardContext& ctx);

std::vector<Prediction> predict_dataset(Model& model, const Dataset& data,
                                        const MatchTrie* trie, MatchPolicy policy);
EvalReport evaluate_model(Model& model, const Dataset& data, const MatchTrie* trie,
                          MatchPolicy policy);

// Binary checkpoint: "GAINCKPT", u32 version, canonical JSON snapshot
// (model config, vocabulary, stage, seed, train config), parameter manifest
// and little-endian f64 data.
inline constexpr uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Model& model, const TrainConfig& cfg);
struct Checkpoint {
  Model model;
  TrainConfig train;
};
Checkpoint parse_checkpoint(std::string_view bytes);
void save_checkpoint(const Model& model, const TrainConfig& cfg, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gain

#endif  // GAIN_TRAIN_H_
