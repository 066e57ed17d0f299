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

#ifndef SIMULMT_VOCAB_HPP
#define SIMULMT_VOCAB_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace simulmt {

extern const char* const kPadToken;   // <pad>
extern const char* const kBosToken;   // <bos>
extern const char* const kEosToken;   // <eos>
extern const char* const kWaitToken;  // <wait>
extern const char* const kUnkToken;   // <unk>

// Token <-> id bijection. Ids 0..3 are the fixed specials; id 4 is <unk>,
// which is the fallback for anything out of vocabulary.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Keeps the most frequent tokens after reserving the specials and <unk>;
  // frequency ties break lexicographically. size counts everything,
  // specials included.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                          int size);

  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int id(const std::string& token) const;  // <unk> id for OOV
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

 private:
  void push_token(const std::string& token);
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace simulmt

#endif  // SIMULMT_VOCAB_HPP
