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

#ifndef SIMULMT_BPE_HPP
#define SIMULMT_BPE_HPP

#include <string>
#include <utility>
#include <vector>

namespace simulmt {

// Greedy byte-pair-encoding subword model. Words are split into UTF-8 code
// points and the learned merges are replayed in order; non-final pieces of a
// word carry the "@@" continuation marker.
class BpeModel {
 public:
  BpeModel() = default;
  explicit BpeModel(std::vector<std::pair<std::string, std::string>> merges)
      : merges_(std::move(merges)) {}

  static BpeModel load(const std::string& path);
  void save(const std::string& path) const;

  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }

  // One word -> subword pieces (with continuation markers).
  std::vector<std::string> segment_word(const std::string& word) const;
  // Whitespace-tokenized sentence -> subword token sequence.
  std::vector<std::string> apply(const std::vector<std::string>& words) const;

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
};

// Learns merge_count merges by repeatedly fusing the most frequent adjacent
// symbol pair (ties break lexicographically). Stops early if no pair is left.
BpeModel train_bpe(const std::vector<std::vector<std::string>>& corpus,
                   int merge_count);

// Inverse of apply: strips continuation markers and rejoins words.
std::vector<std::string> debpe(const std::vector<std::string>& subwords);

std::vector<std::string> split_utf8(const std::string& word);

}  // namespace simulmt

#endif  // SIMULMT_BPE_HPP
