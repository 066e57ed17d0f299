// Copyright 2026 The simulmt Authors
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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "checkpoint.hpp"
#include "doctest.h"
#include "trainer.hpp"

using namespace simulmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("simulmt_trainer_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    std::string p = (path / name).string();
    std::ofstream out(p);
    out << content;
    return p;
  }
};

ModelParams tiny_params(uint64_t seed) {
  return ModelParams::init({10, 10, 4, 4, 1}, seed);
}

// Writes an aligned copy-task corpus and returns (src_path, tgt_path).
std::pair<std::string, std::string> write_copy_corpus(const TempDir& dir,
                                                      const std::string& stem,
                                                      int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(3, 6), tok(0, 7);
  std::ostringstream body;
  for (int i = 0; i < n; ++i) {
    int l = len(rng);
    for (int j = 0; j < l; ++j) {
      if (j) body << ' ';
      body << 'w' << tok(rng);
    }
    body << '\n';
  }
  std::string text = body.str();
  return {dir.file(stem + ".src", text), dir.file(stem + ".tgt", text)};
}

std::string write_vocab(const TempDir& dir, const std::string& name) {
  std::ostringstream body;
  body << "<pad>\n<bos>\n<eos>\n<wait>\n<unk>\n";
  for (int i = 0; i < 8; ++i) body << 'w' << i << '\n';
  return dir.file(name, body.str());
}

std::vector<std::vector<std::string>> read_log(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::istringstream is(line);
    std::string col;
    while (std::getline(is, col, '\t')) cols.push_back(col);
    rows.push_back(cols);
  }
  return rows;
}

}  // namespace

TEST_CASE("adam drives a quadratic objective monotonically down") {
  PrecisionGuard f64(Precision::f64);
  ModelParams p = tiny_params(5);
  TrainState state;
  auto objective = [&] {
    Tensor total = Tensor::scalar(0.0);
    for (auto& [name, t] : p.named()) total = add(total, sum_all(mul(t, t)));
    return total;
  };
  double prev = objective().item();
  for (int step = 0; step < 100; ++step) {
    p.zero_grad();
    Tensor loss = objective();
    backward(loss);
    adam_step(p, state, 1e-3);
    double now = objective().item();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("a gradient of norm 50 is scaled to exactly norm 5") {
  PrecisionGuard f64(Precision::f64);
  ModelParams p = tiny_params(6);
  p.zero_grad();
  // Loss sum(src_embed * M) has constant gradient M; put norm 50 into two
  // entries.
  std::vector<double> m(p.src_embed.size(), 0.0);
  m[0] = 30.0;
  m[1] = 40.0;
  Tensor mask = Tensor::from_values(p.src_embed.shape(), m);
  backward(sum_all(mul(p.src_embed, mask)));

  double norm = clip_global_norm(p, 5.0);
  CHECK(norm == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(p.src_embed.grad()[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(p.src_embed.grad()[1] == doctest::Approx(4.0).epsilon(1e-12));

  double post = 0.0;
  for (double g : p.src_embed.grad()) post += g * g;
  CHECK(std::sqrt(post) == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("gradients under the clip norm are untouched") {
  PrecisionGuard f64(Precision::f64);
  ModelParams p = tiny_params(7);
  p.zero_grad();
  std::vector<double> m(p.src_embed.size(), 0.0);
  m[0] = 3.0;
  Tensor mask = Tensor::from_values(p.src_embed.shape(), m);
  backward(sum_all(mul(p.src_embed, mask)));
  clip_global_norm(p, 5.0);
  CHECK(p.src_embed.grad()[0] == doctest::Approx(3.0));
}

TEST_CASE("validation schedule: decay on regression, none on ties") {
  TempDir dir;
  ModelParams p = tiny_params(8);
  TrainConfig config;
  config.mode = Mode::waitk;
  std::string ckpt = (dir.path / "best.ckpt").string();

  TrainState state;
  state.lr = 1.0;
  state.epoch = 1;
  validate_and_schedule(p, state, 2.0, config, ckpt);
  CHECK(state.lr == doctest::Approx(1.0));
  CHECK(state.best_val_loss == doctest::Approx(2.0));
  CHECK(std::filesystem::exists(ckpt));

  state.epoch = 2;  // regression: lr decays by 1/sqrt(2)
  validate_and_schedule(p, state, 2.5, config, ckpt);
  CHECK(state.lr == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(state.best_val_loss == doctest::Approx(2.0));

  state.epoch = 3;  // equal loss: strict "larger than", no decay
  validate_and_schedule(p, state, 2.5, config, ckpt);
  CHECK(state.lr == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

  state.epoch = 4;  // improvement: checkpoint updates
  validate_and_schedule(p, state, 1.5, config, ckpt);
  CHECK(state.best_val_loss == doctest::Approx(1.5));
  Checkpoint loaded = load_checkpoint(ckpt);
  CHECK(loaded.epoch == 4);
  CHECK(loaded.val_loss == doctest::Approx(1.5));
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK_THROWS_AS(TrainConfig::from_kv(parse_kv_text("bogus_key=1\n")), Error);
  CHECK_THROWS_AS(TrainConfig::from_kv(parse_kv_text("k=abc\n")), Error);
  CHECK_THROWS_AS(TrainConfig::from_kv(parse_kv_text("dropout=1.5\n")), Error);
  TrainConfig c = TrainConfig::from_kv(
      parse_kv_text("mode=waitk\nk=5\n# comment\nlr=0.01\nk=4\n"));
  CHECK(c.mode == Mode::waitk);
  CHECK(c.k == 4);  // later assignment wins
  CHECK(c.lr == doctest::Approx(0.01));
}

TEST_CASE("training runs are deterministic and pick the best checkpoint") {
  TempDir dir;
  auto [train_src, train_tgt] = write_copy_corpus(dir, "train", 24, 11);
  auto [valid_src, valid_tgt] = write_copy_corpus(dir, "valid", 8, 12);
  std::string vocab = write_vocab(dir, "shared.vocab");

  TrainConfig config;
  config.mode = Mode::waitk;
  config.k = 1;
  config.lr = 1e-2;
  config.dropout = 0.1;
  config.batch_size = 8;
  config.embed_dim = 8;
  config.hidden_dim = 8;
  config.layers = 1;
  config.max_epochs = 3;
  config.seed = 99;
  config.train_src = train_src;
  config.train_tgt = train_tgt;
  config.valid_src = valid_src;
  config.valid_tgt = valid_tgt;
  config.src_vocab = vocab;
  config.tgt_vocab = vocab;

  std::string run1 = (dir.path / "run1").string();
  std::string run2 = (dir.path / "run2").string();
  TrainSummary s1 = train_run(config, run1, false);
  TrainSummary s2 = train_run(config, run2, false);

  auto log1 = read_log(run1 + "/train.log");
  auto log2 = read_log(run2 + "/train.log");
  REQUIRE(log1.size() == 3);
  REQUIRE(log1.size() == log2.size());
  double best_logged = 1e30;
  for (size_t i = 0; i < log1.size(); ++i) {
    REQUIRE(log1[i].size() == 5);
    // Identical numerics; the wall-clock column is the one legitimate
    // difference between reruns.
    for (int c = 0; c < 4; ++c) CHECK(log1[i][c] == log2[i][c]);
    best_logged = std::min(best_logged, std::stod(log1[i][2]));
  }
  CHECK(std::filesystem::exists(run1 + "/config.resolved"));
  CHECK(std::filesystem::exists(s1.best_checkpoint_path));
  CHECK(s1.best_val_loss == doctest::Approx(s2.best_val_loss));

  // The saved checkpoint carries the smallest validation loss seen (the log
  // rounds to 6 decimals).
  Checkpoint best = load_checkpoint(s1.best_checkpoint_path);
  CHECK(best.val_loss == doctest::Approx(best_logged).epsilon(1e-6));
}

TEST_CASE("adaptive training steps run end to end on a tiny corpus") {
  TempDir dir;
  auto [train_src, train_tgt] = write_copy_corpus(dir, "train", 12, 21);
  auto [valid_src, valid_tgt] = write_copy_corpus(dir, "valid", 4, 22);
  std::string vocab = write_vocab(dir, "shared.vocab");

  TrainConfig config;
  config.mode = Mode::adaptive;
  config.alpha = 0.05;
  config.lr = 1e-2;
  config.dropout = 0.0;
  config.batch_size = 4;
  config.embed_dim = 8;
  config.hidden_dim = 8;
  config.layers = 1;
  config.max_epochs = 2;
  config.seed = 5;
  config.train_src = train_src;
  config.train_tgt = train_tgt;
  config.valid_src = valid_src;
  config.valid_tgt = valid_tgt;
  config.src_vocab = vocab;
  config.tgt_vocab = vocab;

  std::string run = (dir.path / "run").string();
  TrainSummary summary = train_run(config, run, false);
  CHECK(std::isfinite(summary.best_val_loss));
  auto log = read_log(run + "/train.log");
  CHECK(log.size() == 2);
}
