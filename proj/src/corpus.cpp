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

#include "corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

namespace simulmt {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(std::move(tok));
  return tokens;
}

namespace {

bool valid_utf8(const std::string& s) {
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    size_t extra;
    if (c < 0x80) extra = 0;
    else if ((c & 0xe0) == 0xc0) extra = 1;
    else if ((c & 0xf0) == 0xe0) extra = 2;
    else if ((c & 0xf8) == 0xf0) extra = 3;
    else return false;
    if (i + extra >= s.size() && extra > 0) return false;
    for (size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Error::Code::io, "corpus: cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!valid_utf8(line)) {
      fail(Error::Code::parse, "corpus: " + path + " line " +
                                   std::to_string(lines.size() + 1) +
                                   " is not valid UTF-8");
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

std::vector<RawPair> load_parallel_corpus(const std::string& src_path,
                                          const std::string& tgt_path,
                                          int max_len, double max_ratio,
                                          CorpusStats* stats) {
  auto src_lines = read_lines(src_path);
  auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size()) {
    fail(Error::Code::parse,
         "corpus: line counts differ, " + src_path + " has " +
             std::to_string(src_lines.size()) + " and " + tgt_path + " has " +
             std::to_string(tgt_lines.size()));
  }
  std::vector<RawPair> kept;
  CorpusStats local;
  for (size_t i = 0; i < src_lines.size(); ++i) {
    RawPair pair{split_tokens(src_lines[i]), split_tokens(tgt_lines[i])};
    size_t is = pair.source.size(), it = pair.target.size();
    bool drop = is == 0 || it == 0 ||
                is > static_cast<size_t>(max_len) ||
                it > static_cast<size_t>(max_len);
    if (!drop) {
      double lo = static_cast<double>(std::min(is, it));
      double hi = static_cast<double>(std::max(is, it));
      drop = hi / lo > max_ratio;  // ratio check in both directions
    }
    if (drop) {
      ++local.dropped;
    } else {
      ++local.kept;
      kept.push_back(std::move(pair));
    }
  }
  if (stats) *stats = local;
  return kept;
}

std::vector<SentencePair> encode_pairs(const std::vector<RawPair>& raw,
                                       const Vocabulary& src_vocab,
                                       const Vocabulary& tgt_vocab,
                                       const BpeModel* src_bpe,
                                       const BpeModel* tgt_bpe) {
  std::vector<SentencePair> out;
  out.reserve(raw.size());
  for (const auto& pair : raw) {
    SentencePair sp;
    sp.source_ids = src_vocab.encode(
        src_bpe ? src_bpe->apply(pair.source) : pair.source);
    sp.target_ids = tgt_vocab.encode(
        tgt_bpe ? tgt_bpe->apply(pair.target) : pair.target);
    sp.target_ids.push_back(kEosId);
    out.push_back(std::move(sp));
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs,
                                int batch_size, uint64_t seed) {
  if (pairs.empty()) {
    fail(Error::Code::invalid_argument, "make_batches: no pairs");
  }
  if (batch_size < 1) {
    fail(Error::Code::invalid_argument, "make_batches: batch_size < 1");
  }
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Sort pools of several batches by source length; keeps padding small
  // without making batch contents a pure function of length.
  size_t pool = static_cast<size_t>(batch_size) * 16;
  for (size_t start = 0; start < order.size(); start += pool) {
    size_t end = std::min(order.size(), start + pool);
    std::stable_sort(order.begin() + start, order.begin() + end,
                     [&](size_t a, size_t b) {
                       return pairs[a].source_ids.size() <
                              pairs[b].source_ids.size();
                     });
  }

  std::vector<Batch> batches;
  for (size_t start = 0; start < order.size();
       start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(order.size(), start + static_cast<size_t>(batch_size));
    Batch b;
    size_t imax = 0, jmax = 0;
    for (size_t k = start; k < end; ++k) {
      const SentencePair& sp = pairs[order[k]];
      imax = std::max(imax, sp.source_ids.size());
      jmax = std::max(jmax, sp.target_ids.size());
      b.pairs.push_back(sp);
    }
    for (const SentencePair& sp : b.pairs) {
      std::vector<int> s(imax, kPadId), t(jmax, kPadId);
      std::copy(sp.source_ids.begin(), sp.source_ids.end(), s.begin());
      std::copy(sp.target_ids.begin(), sp.target_ids.end(), t.begin());
      b.source.push_back(std::move(s));
      b.target.push_back(std::move(t));
      b.source_lengths.push_back(static_cast<int>(sp.source_ids.size()));
      b.target_lengths.push_back(static_cast<int>(sp.target_ids.size()));
    }
    batches.push_back(std::move(b));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace simulmt
