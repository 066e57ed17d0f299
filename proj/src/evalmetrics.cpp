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

#include "evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "corpus.hpp"
#include "losses.hpp"

namespace simulmt {

std::vector<DecodeTrace> decode_corpus(const ModelParams& params,
                                       const std::vector<std::vector<int>>& sources,
                                       Mode mode, int k, int max_len,
                                       int threads) {
  set_training_mode(false);
  std::vector<DecodeTrace> traces(sources.size());
  auto decode_one = [&](size_t i) {
    if (sources[i].empty()) {
      fail(Error::Code::invalid_argument,
           "decode: empty source line " + std::to_string(i + 1));
    }
    if (mode == Mode::adaptive) {
      int max_T = static_cast<int>(sources[i].size()) + 2 * max_len;
      traces[i] = rollout_adaptive_free(params, sources[i], max_T);
    } else {
      traces[i] = decode_free_fixed(params, sources[i], mode, k, max_len);
    }
  };
  if (threads <= 1 || sources.size() < 2) {
    NoGradGuard no_grad;
    for (size_t i = 0; i < sources.size(); ++i) decode_one(i);
    return traces;
  }
  int nt = std::min<int>(threads, static_cast<int>(sources.size()));
  std::vector<std::thread> pool;
  std::vector<std::string> errors(nt);
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      NoGradGuard no_grad;  // thread-local; parameters stay shared read-only
      try {
        for (size_t i = t; i < sources.size(); i += nt) decode_one(i);
      } catch (const std::exception& e) {
        errors[t] = e.what();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (!e.empty()) fail(Error::Code::invalid_argument, e);
  }
  return traces;
}

int first_output_delay(const DecodeTrace& trace) {
  switch (trace.mode) {
    case Mode::adaptive:
      return trace.waits_before_first_output();
    case Mode::waitk:
      return std::min(trace.k, trace.source_len - 1);
    case Mode::full_sentence:
      return trace.source_len - 1;
  }
  return 0;
}

LatencyReport latency(const std::vector<DecodeTrace>& traces) {
  if (traces.empty()) {
    fail(Error::Code::invalid_argument, "latency: no traces");
  }
  LatencyReport report;
  report.delays.reserve(traces.size());
  double sum = 0.0;
  for (const auto& t : traces) {
    int d = first_output_delay(t);
    report.delays.push_back(d);
    sum += d;
  }
  report.mean = sum / static_cast<double>(report.delays.size());
  double sq = 0.0;
  for (int d : report.delays) {
    double e = d - report.mean;
    sq += e * e;
  }
  report.stddev = std::sqrt(sq / static_cast<double>(report.delays.size()));
  return report;
}

// ---- BLEU -------------------------------------------------------------------

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, int64_t> ngram_counts(const std::vector<std::string>& tokens,
                                      int n) {
  std::map<Ngram, int64_t> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

double bleu(const std::vector<std::vector<std::string>>& hypotheses,
            const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.size() != references.size()) {
    fail(Error::Code::invalid_argument,
         "bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
             std::to_string(references.size()) + " references");
  }
  if (hypotheses.empty()) {
    fail(Error::Code::invalid_argument, "bleu: empty corpus");
  }
  constexpr int kMaxOrder = 4;
  int64_t matched[kMaxOrder] = {0, 0, 0, 0};
  int64_t total[kMaxOrder] = {0, 0, 0, 0};
  int64_t hyp_len = 0, ref_len = 0;
  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    hyp_len += static_cast<int64_t>(hyp.size());
    ref_len += static_cast<int64_t>(ref.size());
    for (int n = 1; n <= kMaxOrder; ++n) {
      auto hyp_counts = ngram_counts(hyp, n);
      auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          matched[n - 1] += std::min(count, it->second);  // clipped
        }
      }
    }
  }
  double log_precision = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (matched[n] == 0 || total[n] == 0) return 0.0;  // no smoothing
    log_precision +=
        std::log(static_cast<double>(matched[n]) / static_cast<double>(total[n]));
  }
  double bp = 1.0;
  if (hyp_len < ref_len && hyp_len > 0) {
    bp = std::exp(1.0 - static_cast<double>(ref_len) /
                            static_cast<double>(hyp_len));
  }
  if (hyp_len == 0) return 0.0;
  return 100.0 * bp * std::exp(log_precision / kMaxOrder);
}

// ---- hypotheses and traces ---------------------------------------------------

std::vector<int> hypothesis_ids(const DecodeTrace& trace) {
  std::vector<int> raw = trace.emissions();
  std::vector<int> ids;
  if (trace.mode == Mode::adaptive) {
    // CTC path semantics: a repeat means "stay", so collapse first.
    ids = collapse_path(raw);
  } else {
    ids = raw;
    std::erase(ids, kWaitId);
  }
  std::erase(ids, kBosId);
  std::erase(ids, kEosId);
  return ids;
}

std::vector<std::string> hypothesis_words(const DecodeTrace& trace,
                                          const Vocabulary& tgt_vocab) {
  return debpe(tgt_vocab.decode(hypothesis_ids(trace)));
}

std::string render_trace(const DecodeTrace& trace,
                         const Vocabulary& tgt_vocab) {
  std::ostringstream os;
  bool first = true;
  for (const auto& step : trace.steps) {
    if (!first) os << ' ';
    first = false;
    if (step.action == TraceStep::Action::read) {
      os << 'R';
    } else {
      os << "W:" << tgt_vocab.token(step.token);
    }
  }
  return os.str();
}

std::string MetricsReport::tsv() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.2f\t%.2f\t%.2f\t%d", bleu_score, lat.mean,
                lat.stddev, n_sentences);
  return buf;
}

TranslationResult translate_lines(const ModelParams& params,
                                  const Vocabulary& src_vocab,
                                  const Vocabulary& tgt_vocab,
                                  const BpeModel* src_bpe,
                                  const std::vector<std::string>& lines,
                                  Mode mode, int k, int max_len, int threads) {
  std::vector<std::vector<int>> sources;
  sources.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    auto tokens = split_tokens(lines[i]);
    if (tokens.empty()) {
      fail(Error::Code::invalid_argument,
           "translate: empty source line " + std::to_string(i + 1));
    }
    if (src_bpe) tokens = src_bpe->apply(tokens);
    sources.push_back(src_vocab.encode(tokens));
  }
  TranslationResult result;
  result.traces = decode_corpus(params, sources, mode, k, max_len, threads);
  result.hypotheses.reserve(result.traces.size());
  for (const auto& trace : result.traces) {
    result.hypotheses.push_back(hypothesis_words(trace, tgt_vocab));
  }
  return result;
}

MetricsReport score_translation(const TranslationResult& result,
                                const std::vector<std::string>& ref_lines) {
  if (ref_lines.size() != result.hypotheses.size()) {
    fail(Error::Code::invalid_argument,
         "evaluate: " + std::to_string(result.hypotheses.size()) +
             " hypotheses vs " + std::to_string(ref_lines.size()) +
             " references");
  }
  std::vector<std::vector<std::string>> refs;
  refs.reserve(ref_lines.size());
  for (const auto& line : ref_lines) refs.push_back(split_tokens(line));
  MetricsReport report;
  report.bleu_score = bleu(result.hypotheses, refs);
  report.lat = latency(result.traces);
  report.n_sentences = static_cast<int>(result.traces.size());
  return report;
}

}  // namespace simulmt
