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

#include "bpe.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "common.hpp"

namespace simulmt {

namespace {
const char* const kContinuation = "@@";
}

std::vector<std::string> split_utf8(const std::string& word) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < word.size()) {
    unsigned char c = static_cast<unsigned char>(word[i]);
    size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    if (i + len > word.size()) len = word.size() - i;
    out.push_back(word.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

std::vector<std::string> merge_pair(const std::vector<std::string>& symbols,
                                    const std::string& left,
                                    const std::string& right) {
  std::vector<std::string> out;
  out.reserve(symbols.size());
  size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == left &&
        symbols[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace

BpeModel train_bpe(const std::vector<std::vector<std::string>>& corpus,
                   int merge_count) {
  if (merge_count < 0) {
    fail(Error::Code::invalid_argument, "train_bpe: negative merge count");
  }
  std::map<std::string, int64_t> word_freq;
  for (const auto& sent : corpus) {
    for (const auto& w : sent) ++word_freq[w];
  }
  if (word_freq.empty()) {
    fail(Error::Code::invalid_argument, "train_bpe: empty corpus");
  }

  std::vector<std::pair<std::vector<std::string>, int64_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.emplace_back(split_utf8(w), f);

  std::vector<std::pair<std::string, std::string>> merges;
  for (int m = 0; m < merge_count; ++m) {
    // Ordered map: ties on count resolve to the lexicographically smallest
    // pair, so training is deterministic.
    std::map<std::pair<std::string, std::string>, int64_t> pair_counts;
    for (const auto& [symbols, freq] : words) {
      for (size_t i = 0; i + 1 < symbols.size(); ++i) {
        pair_counts[{symbols[i], symbols[i + 1]}] += freq;
      }
    }
    if (pair_counts.empty()) break;
    auto best = pair_counts.begin();
    for (auto it = pair_counts.begin(); it != pair_counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    merges.push_back(best->first);
    for (auto& [symbols, freq] : words) {
      symbols = merge_pair(symbols, best->first.first, best->first.second);
    }
  }
  return BpeModel(std::move(merges));
}

std::vector<std::string> BpeModel::segment_word(const std::string& word) const {
  std::vector<std::string> symbols = split_utf8(word);
  for (const auto& [l, r] : merges_) symbols = merge_pair(symbols, l, r);
  for (size_t i = 0; i + 1 < symbols.size(); ++i) symbols[i] += kContinuation;
  return symbols;
}

std::vector<std::string> BpeModel::apply(
    const std::vector<std::string>& words) const {
  std::vector<std::string> out;
  for (const auto& w : words) {
    auto pieces = segment_word(w);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

std::vector<std::string> debpe(const std::vector<std::string>& subwords) {
  std::vector<std::string> words;
  std::string current;
  for (const auto& piece : subwords) {
    if (piece.size() >= 2 &&
        piece.compare(piece.size() - 2, 2, kContinuation) == 0) {
      current += piece.substr(0, piece.size() - 2);
    } else {
      current += piece;
      words.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(current);  // dangling continuation
  return words;
}

BpeModel BpeModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Code::io, "bpe: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> merges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string l, r, extra;
    if (!(is >> l >> r) || (is >> extra)) {
      fail(Error::Code::parse, "bpe: " + path + " line " +
                                   std::to_string(lineno) +
                                   " is not \"left right\"");
    }
    merges.emplace_back(l, r);
  }
  return BpeModel(std::move(merges));
}

void BpeModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(Error::Code::io, "bpe: cannot write " + path);
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
}

}  // namespace simulmt
