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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "corpus.hpp"
#include "doctest.h"

using namespace simulmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("simulmt_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
};

std::vector<std::vector<std::string>> tokenized(
    const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto& l : lines) out.push_back(split_tokens(l));
  return out;
}

std::string repeat_tokens(const std::string& tok, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += tok;
  }
  return s;
}

}  // namespace

TEST_CASE("corpus filter drops long pairs and bad ratios") {
  TempDir dir;
  std::string src = dir.file("s.txt", repeat_tokens("a", 61) + "\n" +
                                          repeat_tokens("b", 10) + "\n" +
                                          "c\n");
  std::string tgt = dir.file("t.txt", repeat_tokens("x", 5) + "\n" +
                                          repeat_tokens("y", 10) + "\n" +
                                          repeat_tokens("z", 10) + "\n");
  CorpusStats stats;
  auto pairs = load_parallel_corpus(src, tgt, 60, 9.0, &stats);
  // (61,5) dropped by length; (10,10) kept; (1,10) dropped by ratio 10 > 9.
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].source.size() == 10);
  CHECK(stats.kept == 1);
  CHECK(stats.dropped == 2);
}

TEST_CASE("corpus ratio filter applies in both directions") {
  TempDir dir;
  std::string src = dir.file("s.txt", repeat_tokens("a", 10) + "\n");
  std::string tgt = dir.file("t.txt", "x\n");
  auto pairs = load_parallel_corpus(src, tgt, 60, 9.0);
  CHECK(pairs.empty());
}

TEST_CASE("corpus loader reports mismatched line counts") {
  TempDir dir;
  std::string src = dir.file("s.txt", "a\nb\n");
  std::string tgt = dir.file("t.txt", "x\n");
  try {
    load_parallel_corpus(src, tgt, 60, 9.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("2") != std::string::npos);
    CHECK(msg.find("1") != std::string::npos);
  }
}

TEST_CASE("corpus loader reports undecodable bytes with the line number") {
  TempDir dir;
  std::string bad = "ok line\n\xff\xfe broken\n";
  std::string src = dir.file("s.txt", bad);
  std::string tgt = dir.file("t.txt", "x\ny\n");
  try {
    load_parallel_corpus(src, tgt, 60, 9.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("bpe with zero merges splits into characters") {
  BpeModel model = train_bpe(tokenized({"abc ab"}), 0);
  CHECK(model.merges().empty());
  auto pieces = model.segment_word("abc");
  REQUIRE(pieces.size() == 3);
  CHECK(pieces[0] == "a@@");
  CHECK(pieces[1] == "b@@");
  CHECK(pieces[2] == "c");
}

TEST_CASE("bpe learns the most frequent pair first") {
  // "aaab aaab": pair (a,a) occurs 2x per word, (a,b) once.
  BpeModel model = train_bpe(tokenized({"aaab aaab"}), 1);
  REQUIRE(model.merges().size() == 1);
  CHECK(model.merges()[0].first == "a");
  CHECK(model.merges()[0].second == "a");
}

TEST_CASE("bpe training rejects an empty corpus") {
  CHECK_THROWS_AS(train_bpe({}, 5), Error);
}

TEST_CASE("de-bpe restores the original sentence") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 8), nwords(1, 6), ch(0, 25);
  std::vector<std::string> lines = {"the quick brown fox", "aaa bbb aaab"};
  // Random sentences over a-z.
  for (int i = 0; i < 20; ++i) {
    std::string line;
    int w = nwords(rng);
    for (int j = 0; j < w; ++j) {
      if (j) line += ' ';
      int l = len(rng);
      for (int k = 0; k < l; ++k) line += static_cast<char>('a' + ch(rng));
    }
    lines.push_back(line);
  }
  BpeModel model = train_bpe(tokenized(lines), 30);
  for (const auto& line : lines) {
    auto words = split_tokens(line);
    CHECK(debpe(model.apply(words)) == words);
  }
}

TEST_CASE("bpe model file round-trips") {
  TempDir dir;
  BpeModel model = train_bpe(tokenized({"aaab aaab abab"}), 3);
  std::string path = (dir.path / "model.bpe").string();
  model.save(path);
  BpeModel loaded = BpeModel::load(path);
  CHECK(loaded.merges() == model.merges());
}

TEST_CASE("vocabulary keeps specials, unk, and the frequency order") {
  auto corpus = tokenized({"dog cat dog", "dog bird"});
  Vocabulary v = Vocabulary::build(corpus, 10);
  // 4 specials + <unk> + 3 tokens.
  CHECK(v.size() == 8);
  CHECK(v.id("<pad>") == kPadId);
  CHECK(v.id("<bos>") == kBosId);
  CHECK(v.id("<eos>") == kEosId);
  CHECK(v.id("<wait>") == kWaitId);
  CHECK(v.id("<unk>") == kUnkId);
  CHECK(v.token(5) == "dog");  // most frequent first
  // cat/bird tie at count 1: lexicographic order.
  CHECK(v.token(6) == "bird");
  CHECK(v.token(7) == "cat");
  CHECK(v.id("zebra") == kUnkId);
  CHECK(v.token(v.id("cat")) == "cat");
}

TEST_CASE("vocabulary budget is respected exactly") {
  std::vector<std::vector<std::string>> corpus;
  for (int i = 0; i < 200; ++i) {
    corpus.push_back({"tok" + std::to_string(i)});
  }
  Vocabulary v = Vocabulary::build(corpus, 50);
  CHECK(v.size() == 50);
}

TEST_CASE("vocabulary rejects sizes below specials+1") {
  CHECK_THROWS_AS(Vocabulary::build(tokenized({"a"}), 4), Error);
}

TEST_CASE("vocabulary file round-trips with specials pinned") {
  TempDir dir;
  Vocabulary v = Vocabulary::build(tokenized({"a b c"}), 10);
  std::string path = (dir.path / "v.vocab").string();
  v.save(path);
  Vocabulary loaded = Vocabulary::load(path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.id("b") == v.id("b"));
}

TEST_CASE("batches cover all pairs with sizes {64,64,2}") {
  std::vector<SentencePair> pairs;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> len(1, 12);
  for (int i = 0; i < 130; ++i) {
    SentencePair p;
    p.source_ids.assign(len(rng), 5);
    p.target_ids.assign(len(rng), 6);
    p.target_ids.push_back(kEosId);
    pairs.push_back(p);
  }
  auto batches = make_batches(pairs, 64, 17);
  REQUIRE(batches.size() == 3);
  std::multiset<int> sizes;
  for (const auto& b : batches) sizes.insert(b.size());
  CHECK(sizes == std::multiset<int>{2, 64, 64});
}

TEST_CASE("batching is deterministic in the seed") {
  std::vector<SentencePair> pairs;
  for (int i = 0; i < 40; ++i) {
    SentencePair p;
    p.source_ids.assign(1 + i % 7, i);
    p.target_ids = {i, kEosId};
    pairs.push_back(p);
  }
  auto a = make_batches(pairs, 8, 5);
  auto b = make_batches(pairs, 8, 5);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].source == b[i].source);
    CHECK(a[i].target == b[i].target);
  }
}

TEST_CASE("padded cells are PAD and lengths within extents") {
  std::vector<SentencePair> pairs;
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> len(1, 9);
  for (int i = 0; i < 50; ++i) {
    SentencePair p;
    p.source_ids.assign(len(rng), 7);
    p.target_ids.assign(len(rng), 8);
    p.target_ids.push_back(kEosId);
    pairs.push_back(p);
  }
  for (const auto& batch : make_batches(pairs, 16, 21)) {
    for (int s = 0; s < batch.size(); ++s) {
      REQUIRE(batch.source_lengths[s] <=
              static_cast<int>(batch.source[s].size()));
      for (size_t i = batch.source_lengths[s]; i < batch.source[s].size();
           ++i) {
        CHECK(batch.source[s][i] == kPadId);
      }
      for (size_t j = batch.target_lengths[s]; j < batch.target[s].size();
           ++j) {
        CHECK(batch.target[s][j] == kPadId);
      }
    }
  }
}

TEST_CASE("encode_pairs appends EOS and maps OOV to unk") {
  Vocabulary sv = Vocabulary::build(tokenized({"a b"}), 10);
  Vocabulary tv = Vocabulary::build(tokenized({"x y"}), 10);
  auto pairs = encode_pairs({{{"a", "zz"}, {"x"}}}, sv, tv, nullptr, nullptr);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].source_ids == std::vector<int>{sv.id("a"), kUnkId});
  CHECK(pairs[0].target_ids == std::vector<int>{tv.id("x"), kEosId});
}
