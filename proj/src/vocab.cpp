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

#include "vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace simulmt {

const char* const kPadToken = "<pad>";
const char* const kBosToken = "<bos>";
const char* const kEosToken = "<eos>";
const char* const kWaitToken = "<wait>";
const char* const kUnkToken = "<unk>";

namespace {
const char* const kSpecials[] = {kPadToken, kBosToken, kEosToken, kWaitToken};
}

void Vocabulary::push_token(const std::string& token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& corpus, int size) {
  if (size < kNumSpecials + 1) {
    fail(Error::Code::invalid_argument,
         "build_vocab: size " + std::to_string(size) +
             " is smaller than specials+1 (" +
             std::to_string(kNumSpecials + 1) + ")");
  }
  // std::map keeps candidates lexicographically sorted, which settles
  // frequency ties.
  std::map<std::string, int64_t> counts;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) ++counts[tok];
  }
  std::vector<std::pair<std::string, int64_t>> ranked(counts.begin(),
                                                      counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });

  Vocabulary v;
  for (const char* s : kSpecials) v.push_token(s);
  v.push_token(kUnkToken);
  int budget = size - v.size();
  for (const auto& [tok, cnt] : ranked) {
    if (budget <= 0) break;
    if (v.token_to_id_.count(tok)) continue;  // corpus may contain specials
    v.push_token(tok);
    --budget;
  }
  return v;
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Code::io, "vocab: cannot open " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.push_token(line);
  }
  if (v.size() < kNumSpecials + 1) {
    fail(Error::Code::parse,
         "vocab: " + path + " has only " + std::to_string(v.size()) +
             " entries, need the 4 specials plus <unk>");
  }
  for (int i = 0; i < kNumSpecials; ++i) {
    if (v.id_to_token_[i] != kSpecials[i]) {
      fail(Error::Code::parse, "vocab: " + path + " line " +
                                   std::to_string(i + 1) + " must be " +
                                   kSpecials[i] + ", got " +
                                   v.id_to_token_[i]);
    }
  }
  if (v.id_to_token_[kUnkId] != kUnkToken) {
    fail(Error::Code::parse,
         "vocab: " + path + " line 5 must be <unk>, got " +
             v.id_to_token_[kUnkId]);
  }
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Error::Code::io, "vocab: cannot write " + path);
  for (const auto& tok : id_to_token_) out << tok << '\n';
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    fail(Error::Code::invalid_argument,
         "vocab: id " + std::to_string(id) + " outside [0," +
             std::to_string(size()) + ")");
  }
  return id_to_token_[id];
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<int> Vocabulary::encode(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) tokens.push_back(token(i));
  return tokens;
}

}  // namespace simulmt
