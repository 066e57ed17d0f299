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

#ifndef SIMULMT_CORPUS_HPP
#define SIMULMT_CORPUS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bpe.hpp"
#include "common.hpp"
#include "vocab.hpp"

namespace simulmt {

struct RawPair {
  std::vector<std::string> source;
  std::vector<std::string> target;
};

struct CorpusStats {
  int64_t kept = 0;
  int64_t dropped = 0;
};

// Id-encoded pair: source is the plain token sequence, target ends with EOS.
struct SentencePair {
  std::vector<int> source_ids;
  std::vector<int> target_ids;
};

struct Batch {
  // B x I_max / B x J_max, PAD beyond each length.
  std::vector<std::vector<int>> source;
  std::vector<std::vector<int>> target;
  std::vector<int> source_lengths;
  std::vector<int> target_lengths;
  // The un-padded pairs, in batch order; the per-sentence training paths
  // consume these directly.
  std::vector<SentencePair> pairs;
  int size() const { return static_cast<int>(pairs.size()); }
};

std::vector<std::string> split_tokens(const std::string& line);

// Reads two aligned token-per-line files, dropping pairs longer than max_len
// on either side or with a token-count ratio above max_ratio in either
// direction.
std::vector<RawPair> load_parallel_corpus(const std::string& src_path,
                                          const std::string& tgt_path,
                                          int max_len, double max_ratio,
                                          CorpusStats* stats = nullptr);

// Applies optional BPE then encodes with the vocabularies; appends EOS to
// the target side.
std::vector<SentencePair> encode_pairs(const std::vector<RawPair>& raw,
                                       const Vocabulary& src_vocab,
                                       const Vocabulary& tgt_vocab,
                                       const BpeModel* src_bpe,
                                       const BpeModel* tgt_bpe);

// Seed-shuffled batches, pooled by similar source length to limit padding.
std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs,
                                int batch_size, uint64_t seed);

}  // namespace simulmt

#endif  // SIMULMT_CORPUS_HPP
