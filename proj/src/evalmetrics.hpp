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

#ifndef SIMULMT_EVALMETRICS_HPP
#define SIMULMT_EVALMETRICS_HPP

#include <string>
#include <vector>

#include "bpe.hpp"
#include "model.hpp"
#include "vocab.hpp"

namespace simulmt {

// Greedy incremental decoding for a whole corpus of id-encoded sources.
// max_len bounds the output length (J_max); threads fan out over sentences
// with results identical at any thread count.
std::vector<DecodeTrace> decode_corpus(const ModelParams& params,
                                       const std::vector<std::vector<int>>& sources,
                                       Mode mode, int k, int max_len,
                                       int threads = 1);

struct LatencyReport {
  std::vector<int> delays;  // per sentence
  double mean = 0.0;
  double stddev = 0.0;  // population
};

// Token-level first-output delay per trace: <wait> emissions before the
// first real token for the adaptive policy, min(k, I-1) for wait-k, I-1 for
// full-sentence (every read beyond the first counts as a wait).
int first_output_delay(const DecodeTrace& trace);
LatencyReport latency(const std::vector<DecodeTrace>& traces);

// Corpus BLEU, 4-gram, brevity penalty, no smoothing: a zero precision at
// any order gives 0.
double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references);

// Target ids emitted by a trace, cleaned for scoring: adaptive traces get
// the full CTC collapse (merge repeats, drop <wait>), fixed schedules only
// drop EOS/BOS/<wait>.
std::vector<int> hypothesis_ids(const DecodeTrace& trace);
// ...then mapped through the vocabulary and de-BPE'd into words.
std::vector<std::string> hypothesis_words(const DecodeTrace& trace,
                                          const Vocabulary& tgt_vocab);

// "R" / "W:<token>" rendering used for the --emit-traces output.
std::string render_trace(const DecodeTrace& trace, const Vocabulary& tgt_vocab);

struct MetricsReport {
  double bleu_score = 0.0;
  LatencyReport lat;
  int n_sentences = 0;
  std::string tsv() const;  // "bleu latency_mean latency_std n_sentences"
};

struct TranslationResult {
  std::vector<DecodeTrace> traces;
  std::vector<std::vector<std::string>> hypotheses;
};

// File-level pipeline: tokenize (+BPE) each source line, decode, detokenize.
// Errors on empty source lines, naming the line number.
TranslationResult translate_lines(const ModelParams& params,
                                  const Vocabulary& src_vocab,
                                  const Vocabulary& tgt_vocab,
                                  const BpeModel* src_bpe,
                                  const std::vector<std::string>& lines,
                                  Mode mode, int k, int max_len, int threads);

MetricsReport score_translation(const TranslationResult& result,
                                const std::vector<std::string>& ref_lines);

}  // namespace simulmt

#endif  // SIMULMT_EVALMETRICS_HPP
