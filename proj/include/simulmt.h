/* Copyright 2026 The simulmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the simulmt simultaneous-translation library. All entry
 * points return a status code; simulmt_last_error() describes the most
 * recent failure on the calling thread. */

#ifndef SIMULMT_H
#define SIMULMT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SIMULMT_API __declspec(dllexport)
#else
#define SIMULMT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum simulmt_status {
  SIMULMT_OK = 0,
  SIMULMT_ERR_INVALID_ARG = 1,
  SIMULMT_ERR_IO = 2,
  SIMULMT_ERR_PARSE = 3,
  SIMULMT_ERR_NUMERIC = 4,
  SIMULMT_ERR_INTERNAL = 5
} simulmt_status;

SIMULMT_API const char* simulmt_version(void);

/* Message for the most recent failing call on this thread; never NULL. */
SIMULMT_API const char* simulmt_last_error(void);

/* Learns merge_count BPE merges from a token-per-line corpus, applies them,
 * and builds a vocabulary of vocab_size entries (4 specials + <unk>
 * included). Writes "left right" merge lines and a token-per-line vocab. */
SIMULMT_API simulmt_status simulmt_bpe_train(const char* corpus_path,
                                             int merge_count, int vocab_size,
                                             const char* bpe_out_path,
                                             const char* vocab_out_path);

/* Word-level variant: vocabulary over whitespace tokens, no subwords. */
SIMULMT_API simulmt_status simulmt_vocab_build(const char* corpus_path,
                                               int vocab_size,
                                               const char* vocab_out_path);

/* config_text holds "key=value" lines ('#' comments allowed; later lines
 * win, which is how flag overrides work). Writes config.resolved, train.log
 * (epoch<TAB>train<TAB>val<TAB>lr<TAB>seconds) and best.ckpt under run_dir. */
SIMULMT_API simulmt_status simulmt_train(const char* config_text,
                                         const char* run_dir);

typedef struct simulmt_model simulmt_model;

/* Loads a checkpoint plus its vocabularies; BPE models are optional (pass
 * NULL for pre-tokenized input). The handle is immutable and safe to share
 * across decoding threads. */
SIMULMT_API simulmt_status simulmt_model_load(const char* checkpoint_path,
                                              const char* src_vocab_path,
                                              const char* tgt_vocab_path,
                                              const char* src_bpe_path,
                                              const char* tgt_bpe_path,
                                              simulmt_model** out_model);

SIMULMT_API void simulmt_model_free(simulmt_model* model);

/* mode: "full-sentence" | "waitk" | "adaptive" | NULL (checkpoint default).
 * k <= 0 also falls back to the checkpoint value. Writes one detokenized
 * sentence per line; traces_out_path (optional) gets one "R"/"W:<token>"
 * action line per sentence. */
SIMULMT_API simulmt_status simulmt_translate_file(simulmt_model* model,
                                                  const char* source_path,
                                                  const char* mode, int k,
                                                  int max_len, int threads,
                                                  const char* hyp_out_path,
                                                  const char* traces_out_path);

typedef struct simulmt_metrics {
  double bleu;
  double latency_mean;
  double latency_std;
  long long n_sentences;
} simulmt_metrics;

/* Decodes source_path and scores against ref_path. metrics_out_path
 * (optional) receives the single-line TSV
 * "bleu latency_mean latency_std n_sentences"; hyp/trace outputs and the
 * out struct are optional as well. */
SIMULMT_API simulmt_status simulmt_evaluate(simulmt_model* model,
                                            const char* source_path,
                                            const char* ref_path,
                                            const char* mode, int k,
                                            int max_len, int threads,
                                            const char* metrics_out_path,
                                            const char* hyp_out_path,
                                            const char* traces_out_path,
                                            simulmt_metrics* out);

/* Runs the numeric self-checks (CTC forward DP vs. exhaustive enumeration,
 * gradients vs. central finite differences, path-mass conservation) in
 * 64-bit mode. Returns SIMULMT_OK only if every trial passes; *passed and
 * *total report the counts and `report` (optional) receives a short
 * summary. */
SIMULMT_API simulmt_status simulmt_oracle_check(int trials, uint64_t seed,
                                                int* passed, int* total,
                                                char* report,
                                                size_t report_len);

#ifdef __cplusplus
}
#endif

#endif /* SIMULMT_H */
