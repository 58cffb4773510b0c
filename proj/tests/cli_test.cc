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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gain/cli.h"
#include "gain/corpus.h"
#include "gain/ensemble.h"

namespace gain {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result gain_cmd(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gain_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

const std::string kGazetteer = std::string(GAIN_SOURCE_DIR) + "/data/iphone_gazetteer.tsv";

// Small sizes so a whole pipeline runs in a few seconds.
const std::vector<std::string> kTiny = {
    "--set", "task.n_pretrain=120", "--set", "task.n_train=60",  "--set", "task.n_val=20",
    "--set", "train.pretrain_epochs=2", "--set", "train.stage1_epochs=1",
    "--set", "train.stage2_epochs=2", "--set", "model.hidden=16", "--set", "model.embed_dim=8",
    "--set", "model.gaz_hidden=8"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTiny.begin(), kTiny.end());
  return args;
}

TEST_CASE("unknown subcommand exits 1 with usage") {
  const Result r = gain_cmd({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("unknown subcommand 'frobnicate'") != std::string::npos);
  CHECK(r.err.find("Usage:") != std::string::npos);
  CHECK(gain_cmd({}).code == kExitUsage);
  CHECK(gain_cmd({"gradcheck", "--bogus"}).code == kExitUsage);
}

TEST_CASE("gazetteer match prints the one-hot table") {
  const Result r = gain_cmd({"gazetteer", "match", "--gazetteer", kGazetteer, "--tokens",
                             "where to buy apple iphone 13"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out ==
        "Words   O  B-CORP  I-CORP  B-PROD  I-PROD\n"
        "where   1       0       0       0       0\n"
        "to      1       0       0       0       0\n"
        "buy     1       0       0       0       0\n"
        "apple   0       1       0       1       0\n"
        "iphone  0       0       0       1       1\n"
        "13      0       0       0       0       1\n");
  const Result all = gain_cmd({"gazetteer", "match", "--gazetteer", kGazetteer, "--tokens",
                               "where to buy apple iphone 13", "--policy", "all"});
  CHECK(all.out == r.out);
}

TEST_CASE("gradcheck passes") {
  const Result r = gain_cmd({"gradcheck"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("max relative error") != std::string::npos);
  CHECK(r.out.find("stage2 L3 softmax") != std::string::npos);
}

TEST_CASE("errors map to exit codes") {
  const fs::path dir = scratch("errors");
  CHECK(gain_cmd({"gradcheck", "--set", "train.nonsense=1"}).code == kExitUsage);
  CHECK(gain_cmd({"gradcheck", "--set", "model.classifier=tree"}).code == kExitUsage);
  CHECK(gain_cmd({"gradcheck", "--config", (dir / "missing.json").string()}).code == kExitUsage);
  CHECK(gain_cmd({"eval", "--model", (dir / "missing.ckpt").string(), "--out", dir.string()})
            .code == kExitData);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.conll") << "a\tB-PER\nb\tI-LOC\n";
  CHECK(gain_cmd({"data", "validate", "--data", (dir / "bad.conll").string()}).code ==
        kExitData);
  CHECK(gain_cmd({"data", "validate", "--lenient", "--data", (dir / "bad.conll").string()})
            .code == kExitOk);
  CHECK(gain_cmd({"pretrain"}).code == kExitUsage);  // no --out
  fs::remove_all(dir);
}

TEST_CASE("config file, seed and overrides layer in order") {
  const fs::path dir = scratch("layers");
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({"seed": 5, "train": {"dropout": 0.3}})";
  const Result r = gain_cmd({"gazetteer", "match", "--gazetteer", kGazetteer, "--tokens", "apple",
                             "--config", (dir / "cfg.json").string(), "--seed", "9", "--set",
                             "model.classifier=crf", "--out", (dir / "run").string()});
  REQUIRE(r.code == kExitOk);
  const std::string cfg = slurp(dir / "run" / "resolved_config.json");
  CHECK(cfg.find("\"seed\": 9") != std::string::npos);
  CHECK(cfg.find("\"dropout\": 0.3") != std::string::npos);
  CHECK(cfg.find("\"alpha\": 100.0") != std::string::npos);
  CHECK(cfg.find("\"version\": \"0.1.0\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("the pipeline reproduces byte for byte") {
  const fs::path dir = scratch("pipeline");
  for (const char* run_name : {"a", "b"}) {
    const fs::path d = dir / run_name;
    REQUIRE(gain_cmd(with_tiny({"data", "synth", "--task", "--out", (d / "task").string()})).code ==
            kExitOk);
    REQUIRE(gain_cmd(with_tiny({"pretrain", "--out", (d / "pre").string()})).code == kExitOk);
    REQUIRE(gain_cmd(with_tiny({"adapt", "--init", (d / "pre/pretrained.ckpt").string(), "--out",
                                (d / "adapt").string()}))
                .code == kExitOk);
    REQUIRE(gain_cmd(with_tiny({"train", "--init", (d / "adapt/adapted.ckpt").string(),
                                "--data", (d / "task/train.conll").string(), "--val",
                                (d / "task/val.conll").string(), "--gazetteer",
                                (d / "task/gazetteer.tsv").string(), "--out",
                                (d / "train").string()}))
                .code == kExitOk);
    REQUIRE(gain_cmd(with_tiny({"eval", "--model", (d / "train/model.ckpt").string(), "--data",
                                (d / "task/val.conll").string(), "--gazetteer",
                                (d / "task/gazetteer.tsv").string(), "--out",
                                (d / "eval").string()}))
                .code == kExitOk);
  }
  for (const char* f : {"task/train.conll", "task/gazetteer.tsv", "pre/pretrained.ckpt",
                        "adapt/adapted.ckpt", "train/model.ckpt", "train/train_log.json",
                        "eval/report.json", "eval/predictions.jsonl"}) {
    CAPTURE(f);
    const std::string a = slurp(dir / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "b" / f));
  }

  // A model's own predictions ensembled with themselves change nothing.
  const std::string preds = (dir / "a/eval/predictions.jsonl").string();
  const std::string gold = (dir / "a/task/val.conll").string();
  REQUIRE(gain_cmd({"ensemble", "--mode", "avg-logits", "--inputs", preds, preds, preds,
                    "--gold", gold, "--out", (dir / "avg").string()})
              .code == kExitOk);
  REQUIRE(gain_cmd({"ensemble", "--mode", "vote", "--inputs", preds, preds, "--weights", "1,0",
                    "--gold", gold, "--out", (dir / "vote").string()})
              .code == kExitOk);
  const Dataset single = read_conll(dir / "a/eval/predictions.conll");
  CHECK(read_conll(dir / "avg/ensemble.conll") == single);
  CHECK(read_conll(dir / "vote/ensemble.conll") == single);
  CHECK(gain_cmd({"ensemble", "--mode", "vote", "--inputs", preds, "--weights", "0",
                  "--out", (dir / "bad").string()})
            .code == kExitUsage);
  CHECK(gain_cmd({"ensemble", "--mode", "median", "--inputs", preds, "--out",
                  (dir / "bad").string()})
            .code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("cross-validation trains one model per fold and ensembles them") {
  const fs::path dir = scratch("cv");
  REQUIRE(gain_cmd(with_tiny({"data", "synth", "--task", "--out", (dir / "task").string()})).code ==
          kExitOk);
  REQUIRE(gain_cmd(with_tiny({"pretrain", "--data", (dir / "task/pretrain.conll").string(),
                              "--out", (dir / "pre").string()}))
              .code == kExitOk);
  const Result r = gain_cmd(with_tiny(
      {"train", "--cv", "--set", "folds=3", "--init", (dir / "pre/pretrained.ckpt").string(),
       "--data", (dir / "task/train.conll").string(), "--val", (dir / "task/val.conll").string(),
       "--gazetteer", (dir / "task/gazetteer.tsv").string(), "--out", (dir / "cv").string()}));
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("3-fold avg-logits ensemble") != std::string::npos);
  for (int i = 0; i < 3; ++i) {
    CHECK(fs::exists(dir / "cv" / ("fold" + std::to_string(i) + ".ckpt")));
    CHECK(load_predictions((dir / "cv" / ("fold" + std::to_string(i) + "_predictions.jsonl"))
                               .string())
              .sentences.size() == 20);
  }
  CHECK(fs::exists(dir / "cv" / "cv_summary.json"));
  fs::remove_all(dir);
}

TEST_CASE("gazetteer build and coverage") {
  const fs::path dir = scratch("gaz");
  REQUIRE(gain_cmd(with_tiny({"data", "synth", "--task", "--out", (dir / "task").string()})).code ==
          kExitOk);
  const std::string train = (dir / "task/train.conll").string();
  REQUIRE(gain_cmd({"gazetteer", "build", "--data", train, "--out", (dir / "full").string()})
              .code == kExitOk);
  const Result full = gain_cmd({"gazetteer", "coverage", "--gazetteer",
                                (dir / "full/gazetteer.tsv").string(), "--data", train});
  CHECK(full.out.find("average  1.0000") != std::string::npos);
  REQUIRE(gain_cmd({"gazetteer", "build", "--data", train, "--coverage", "0", "--out",
                    (dir / "none").string()})
              .code == kExitOk);
  const Result none = gain_cmd({"gazetteer", "coverage", "--gazetteer",
                                (dir / "none/gazetteer.tsv").string(), "--data", train});
  CHECK(none.out.find("average  0.0000") != std::string::npos);
  REQUIRE(gain_cmd({"data", "augment", "--data", train, "--gazetteer",
                    (dir / "full/gazetteer.tsv").string(), "--append", "--out",
                    (dir / "aug").string()})
              .code == kExitOk);
  CHECK(read_conll(dir / "aug/augmented.conll").size() == 120);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace gain
